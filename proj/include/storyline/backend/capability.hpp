#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace storyline {

enum class Capability {
  kEmbedImage,
  kEmbedText,
  kCaptionImage,
  kCaptionSequence,
  kRefineCaptions,
  kDetect,
  kSegment,
  kFaceEmbedding,
  kAestheticScore,
  kInpaint,
  kGenerateImage,
};

inline constexpr std::array<Capability, 11> kAllCapabilities = {
    Capability::kEmbedImage,     Capability::kEmbedText,     Capability::kCaptionImage,
    Capability::kCaptionSequence, Capability::kRefineCaptions, Capability::kDetect,
    Capability::kSegment,        Capability::kFaceEmbedding, Capability::kAestheticScore,
    Capability::kInpaint,        Capability::kGenerateImage,
};

// Wire name, e.g. "embed_image".
std::string_view ToString(Capability c);
std::optional<Capability> ParseCapability(std::string_view name);

}  // namespace storyline
