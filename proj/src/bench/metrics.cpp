#include "storyline/bench/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "storyline/bench/assignment.hpp"
#include "storyline/common/errors.hpp"
#include "storyline/model/lexicon.hpp"

namespace storyline::bench {

std::string_view ToString(EvalMode mode) { return mode == EvalMode::kSingle ? "single" : "multi"; }

std::optional<EvalMode> ParseEvalMode(std::string_view text) {
  if (text == "single") return EvalMode::kSingle;
  if (text == "multi") return EvalMode::kMulti;
  return std::nullopt;
}

double SemanticAlignment(PerceptionClient& client, const ImageRef& image, std::string_view caption) {
  const auto img = client.EmbedImage(image);
  const auto txt = client.EmbedText(caption);
  if (img.space() != txt.space()) {
    throw std::invalid_argument("semantic alignment: image space '" + img.space() + "' != text space '" +
                                txt.space() + "'");
  }
  return Cosine(img, txt);
}

ImageRef BackgroundOf(PerceptionClient& client, const ImageRef& image) {
  std::vector<std::string> labels;
  for (auto l : lexicon::GenericEntityClasses()) labels.emplace_back(l);
  const auto found = client.Detect(image, labels);
  std::optional<Rle> mask;
  for (const auto& d : found.detections) {
    InstanceMask m;
    try {
      m = client.Segment(image, d.bbox);
    } catch (const InvalidOutputError&) {
      continue;
    }
    mask = mask ? RleUnion(*mask, m.rle) : m.rle;
  }
  if (!mask) return image;
  return client.Inpaint(image, *mask);
}

double BackgroundConsistency(PerceptionClient& client, const ImageRef& reference,
                             std::span<const ImageRef> generated) {
  if (generated.empty()) throw std::invalid_argument("background consistency: no generated images");
  const auto ref = client.EmbedImage(BackgroundOf(client, reference));
  double sum = 0.0;
  for (const auto& g : generated) sum += Cosine(ref, client.EmbedImage(BackgroundOf(client, g)));
  return sum / static_cast<double>(generated.size());
}

std::optional<double> StyleConsistency(PerceptionClient& client, std::span<const ImageRef> images) {
  if (images.size() < 2) return std::nullopt;
  std::vector<EmbeddingVector> e;
  for (const auto& img : images) e.push_back(client.EmbedImage(img));
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < e.size(); ++i) sum += Cosine(e[i], e[i + 1]);
  return sum / static_cast<double>(e.size() - 1);
}

FeatureSet ExtractInstanceFeatures(PerceptionClient& client, const ImageRef& image,
                                   std::span<const std::string> labels) {
  FeatureSet crops;
  if (labels.empty()) return crops;
  const auto found = client.Detect(image, labels);
  for (const auto& d : found.detections) {
    try {
      client.Segment(image, d.bbox);
    } catch (const InvalidOutputError&) {
      continue;
    }
    crops.Add(client.EmbedImage(image, d.bbox), d.label);
  }
  return crops;
}

InstanceScore InstanceConsistency(const FeatureSet& references, const FeatureSet& crops, EvalMode mode) {
  if (references.empty()) throw std::invalid_argument("instance consistency: no reference instances");
  if (crops.empty()) return {0.0, true};
  if (mode == EvalMode::kSingle) {
    double best = -1.0;
    for (const auto& c : crops.vectors()) best = std::max(best, Cosine(references[0], c));
    return {best, false};
  }
  std::vector<std::vector<double>> sim(crops.size(), std::vector<double>(references.size()));
  std::vector<std::vector<double>> cost = sim;
  for (std::size_t i = 0; i < crops.size(); ++i) {
    for (std::size_t j = 0; j < references.size(); ++j) {
      sim[i][j] = Cosine(crops[i], references[j]);
      cost[i][j] = 1.0 - sim[i][j];
    }
  }
  const auto pairs = SolveAssignment(CostMatrix::FromRows(cost));
  double sum = 0.0;
  for (const auto& [i, j] : pairs) sum += sim[i][j];
  return {sum / static_cast<double>(pairs.size()), false};
}

}  // namespace storyline::bench
