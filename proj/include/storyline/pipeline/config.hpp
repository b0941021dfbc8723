#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "storyline/backend/client.hpp"

namespace storyline::pipeline {

inline constexpr std::string_view kPipelineVersion = "storyline-pipeline/1.0";

enum class FilterMode { kUnique, kSequence };

std::string_view ToString(FilterMode mode);
std::optional<FilterMode> ParseFilterMode(std::string_view text);

// Frame admission rules. Aesthetic thresholds are strict: a frame needs a
// score greater than the threshold to stay.
struct FilterPolicy {
  int min_instances = 1;
  int max_instances = 8;
  double aesthetic_min_unique = 5.0;
  double aesthetic_min_sequence = 4.5;
  double detection_confidence_min = 0.30;

  // Throws ConfigError.
  void Validate() const;
  double AestheticThreshold(FilterMode mode) const {
    return mode == FilterMode::kUnique ? aesthetic_min_unique : aesthetic_min_sequence;
  }
};

struct PipelineConfig {
  std::vector<BackendDescriptor> backends;
  FilterPolicy policy;
  double dedup_threshold = 0.95;
  double match_floor = 0.55;
  std::string prompt_template;
  FilterMode mode = FilterMode::kSequence;
  int workers = 4;
  // Directory relative endpoints resolve against.
  std::filesystem::path base_dir;
  // sha256 of the canonical config JSON.
  std::string digest;
};

// Default refinement prompt; carries the {sequence} and {captions} slots.
std::string_view DefaultPromptTemplate();

// Throws ConfigError for unreadable or invalid configs.
PipelineConfig LoadConfig(const std::filesystem::path& path);
PipelineConfig ConfigFromJson(const nlohmann::json& j, const std::filesystem::path& base_dir);

// Capabilities the annotation pipeline cannot run without.
std::vector<Capability> RequiredCapabilities(bool refine = true);

// Opens every configured backend and routes it. Throws ConfigError or
// TransportError.
std::unique_ptr<PerceptionClient> ConnectBackends(const std::vector<BackendDescriptor>& backends,
                                                  const std::filesystem::path& base_dir);

struct StoryManifest {
  std::string story_id;
  // As written in the manifest; recorded in the dataset rows.
  std::vector<std::string> frame_paths;
  // Resolved against the manifest's directory; used for reading.
  std::vector<std::filesystem::path> resolved_paths;
  nlohmann::json source = nlohmann::json::object();
};

// Manifest file: a JSON array of {"story_id", "frames": [paths], "source"?}.
// Throws ConfigError on malformed input.
std::vector<StoryManifest> LoadManifests(const std::filesystem::path& path);
std::vector<StoryManifest> ManifestsFromJson(const nlohmann::json& j, const std::filesystem::path& base_dir);

}  // namespace storyline::pipeline
