#include "storyline/backend/capability.hpp"

namespace storyline {

std::string_view ToString(Capability c) {
  switch (c) {
    case Capability::kEmbedImage:
      return "embed_image";
    case Capability::kEmbedText:
      return "embed_text";
    case Capability::kCaptionImage:
      return "caption_image";
    case Capability::kCaptionSequence:
      return "caption_sequence";
    case Capability::kRefineCaptions:
      return "refine_captions";
    case Capability::kDetect:
      return "detect";
    case Capability::kSegment:
      return "segment";
    case Capability::kFaceEmbedding:
      return "face_embedding";
    case Capability::kAestheticScore:
      return "aesthetic_score";
    case Capability::kInpaint:
      return "inpaint";
    case Capability::kGenerateImage:
      return "generate_image";
  }
  return "unknown";
}

std::optional<Capability> ParseCapability(std::string_view name) {
  for (Capability c : kAllCapabilities) {
    if (ToString(c) == name) return c;
  }
  return std::nullopt;
}

}  // namespace storyline
