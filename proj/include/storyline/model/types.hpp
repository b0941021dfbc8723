#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "storyline/model/embedding.hpp"
#include "storyline/model/mask.hpp"

namespace storyline {

// Content-addressed image reference. `digest` is always set; `path` is empty
// for images that only exist on the backend side.
struct ImageRef {
  std::string digest;
  std::string path;

  bool empty() const { return digest.empty(); }
  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

struct ImageSize {
  int height = 0;
  int width = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

struct Frame {
  std::string frame_id;
  std::string story_id;
  int index = 0;
  ImageRef image;
  std::optional<double> aesthetic_score;
};

enum class CaptionKind { kRaw, kSequence, kRefined };

std::string_view ToString(CaptionKind kind);

// A noun span inside a caption. Spans are byte offsets [start, end).
struct EntityMention {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;
  std::optional<int> identity_index;

  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

struct Caption {
  std::string text;
  CaptionKind kind = CaptionKind::kRaw;
  std::vector<EntityMention> entity_mentions;
};

struct Detection {
  std::string label;
  PixelBox bbox;
  double confidence = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// Detections sorted by descending confidence; ties go top-to-bottom, then
// left-to-right by box origin.
bool DetectionOrder(const Detection& a, const Detection& b);

struct InstanceIdentity {
  int identity_index = 0;
  std::string label;
  EmbeddingVector appearance;
  std::optional<EmbeddingVector> face;
  int first_frame = 0;
};

// (label, identity_index), rendered "woman0".
struct IdentityRef {
  std::string label;
  int identity_index = 0;

  std::string Name() const { return label + std::to_string(identity_index); }
  friend auto operator<=>(const IdentityRef&, const IdentityRef&) = default;
};

struct Instance {
  Detection detection;
  InstanceMask mask;
  int identity_index = 0;
};

struct AnnotatedFrame {
  Frame frame;
  Caption caption_raw;
  Caption caption_refined;
  std::vector<Instance> instances;
  // Refined-caption identities with no matching instance in this frame.
  std::vector<IdentityRef> missing_in_image;
  // Set when a stage produced an unusable result (e.g. an empty mask); such
  // frames never survive filtering.
  std::optional<std::string> flag;
};

}  // namespace storyline
