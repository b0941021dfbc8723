#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "storyline/backend/client.hpp"
#include "storyline/model/embedding.hpp"

namespace storyline::bench {

enum class EvalMode { kSingle, kMulti };

std::string_view ToString(EvalMode mode);
std::optional<EvalMode> ParseEvalMode(std::string_view text);

// Cosine between the image and text embeddings. Throws std::invalid_argument
// when the two embedders report different spaces.
double SemanticAlignment(PerceptionClient& client, const ImageRef& image, std::string_view caption);

// Image with every generic person/animal instance masked out and inpainted;
// the image itself when nothing is found.
ImageRef BackgroundOf(PerceptionClient& client, const ImageRef& image);

// Mean cosine between the reference background and each generated one.
double BackgroundConsistency(PerceptionClient& client, const ImageRef& reference,
                             std::span<const ImageRef> generated);

// Mean cosine of consecutive image embeddings; nullopt for fewer than two
// images.
std::optional<double> StyleConsistency(PerceptionClient& client, std::span<const ImageRef> images);

// Crop embeddings of `labels` instances in the image: detect, segment (boxes
// with unusable masks are skipped), embed the box.
FeatureSet ExtractInstanceFeatures(PerceptionClient& client, const ImageRef& image,
                                   std::span<const std::string> labels);

struct InstanceScore {
  double score = 0.0;
  // No crop survived; the 0 is a fallback, not a measured similarity.
  bool no_instance = false;
};

// Single: best crop against references[0]. Multi: mean matched cosine after
// assignment on 1 - cosine.
InstanceScore InstanceConsistency(const FeatureSet& references, const FeatureSet& crops, EvalMode mode);

}  // namespace storyline::bench
