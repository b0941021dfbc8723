#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "storyline/bench/metrics.hpp"
#include "storyline/model/mask.hpp"
#include "storyline/model/types.hpp"

namespace storyline::bench {

inline constexpr std::size_t kMinScenes = 2;
inline constexpr std::size_t kMaxScenes = 5;

struct EvalScene {
  ImageRef image;
  // Refined caption, identity indices included.
  std::string caption;
};

// A ground-truth entity crop; its feature comes from embed_image on the box.
struct ReferenceInstance {
  std::string label;
  ImageRef image;
  PixelBox bbox;
};

struct EvalItem {
  std::string story_id;
  std::vector<EvalScene> scenes;
  std::vector<ReferenceInstance> references;
  EvalMode mode = EvalMode::kMulti;

  // Distinct reference labels in first-seen order.
  std::vector<std::string> Labels() const;
  // Throws ConfigError.
  void Validate() const;
};

// Item descriptor:
//   {"story_id", "mode"?: "single"|"multi",
//    "scenes": [{"image": path, "caption": text}, ...],
//    "references": [{"label", "image": path, "bbox": [x0, y0, x1, y1]}, ...]}
// Image paths resolve against base_dir; digests are computed from the files.
// Throws ConfigError on malformed input or unreadable images.
EvalItem EvalItemFromJson(const nlohmann::json& j, const std::filesystem::path& base_dir);

// Eval set directory: items/*.json (loaded in file-name order) with paths
// relative to the set root. Throws ConfigError.
std::vector<EvalItem> LoadEvalSet(const std::filesystem::path& dir);

}  // namespace storyline::bench
