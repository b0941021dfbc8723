#include "storyline/pipeline/config.hpp"

#include <cmath>
#include <set>

#include "storyline/common/digest.hpp"
#include "storyline/common/errors.hpp"

namespace storyline::pipeline {

using nlohmann::json;

namespace {

constexpr std::string_view kDefaultPrompt =
    "You are editing the captions of consecutive keyframes from one video.\n"
    "Story so far: {sequence}\n"
    "Per-frame captions:\n"
    "{captions}\n"
    "Rewrite every caption so that each recurring subject is named the same way in every\n"
    "frame. Give each distinct person or animal an identity suffix that starts at 0 per\n"
    "category and never changes across frames (woman0, woman1, dog0; hand0 and hand1 for\n"
    "two hands). Keep the visual content of each caption, add descriptive detail where it\n"
    "helps the narrative, and do not mention anything that is not visible.\n"
    "Return exactly one rewritten caption per input caption, in the same order.\n";

json ParseJsonFile(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = ReadFileBytes(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  try {
    return json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::string_view ToString(FilterMode mode) {
  return mode == FilterMode::kUnique ? "unique" : "sequence";
}

std::optional<FilterMode> ParseFilterMode(std::string_view text) {
  if (text == "unique") return FilterMode::kUnique;
  if (text == "sequence") return FilterMode::kSequence;
  return std::nullopt;
}

void FilterPolicy::Validate() const {
  if (min_instances > max_instances) throw ConfigError("policy: min_instances > max_instances");
  if (min_instances < 0) throw ConfigError("policy: min_instances must be >= 0");
  for (double t : {aesthetic_min_unique, aesthetic_min_sequence, detection_confidence_min}) {
    if (!std::isfinite(t)) throw ConfigError("policy: thresholds must be finite");
  }
}

std::string_view DefaultPromptTemplate() { return kDefaultPrompt; }

PipelineConfig ConfigFromJson(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig c;
  c.base_dir = base_dir;
  try {
    for (const auto& b : j.value("backends", json::array())) c.backends.push_back(DescriptorFromJson(b));
    if (j.contains("policy")) {
      const auto& p = j.at("policy");
      c.policy.min_instances = p.value("min_instances", c.policy.min_instances);
      c.policy.max_instances = p.value("max_instances", c.policy.max_instances);
      c.policy.aesthetic_min_unique = p.value("aesthetic_min_unique", c.policy.aesthetic_min_unique);
      c.policy.aesthetic_min_sequence = p.value("aesthetic_min_sequence", c.policy.aesthetic_min_sequence);
      c.policy.detection_confidence_min =
          p.value("detection_confidence_min", c.policy.detection_confidence_min);
    }
    c.dedup_threshold = j.value("dedup_threshold", c.dedup_threshold);
    c.match_floor = j.value("match_floor", c.match_floor);
    c.workers = j.value("workers", c.workers);
    const auto mode = j.value("mode", std::string("sequence"));
    auto parsed = ParseFilterMode(mode);
    if (!parsed) throw ConfigError("config: mode must be 'unique' or 'sequence', got '" + mode + "'");
    c.mode = *parsed;
    if (j.contains("prompt_template_path")) {
      std::filesystem::path p = j.at("prompt_template_path").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      try {
        c.prompt_template = ReadFileBytes(p);
      } catch (const IoError& e) {
        throw ConfigError(e.what());
      }
    } else {
      c.prompt_template = std::string(kDefaultPrompt);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.policy.Validate();
  if (!(c.dedup_threshold > 0.0 && c.dedup_threshold <= 1.0)) {
    throw ConfigError("config: dedup_threshold must be in (0, 1]");
  }
  if (!std::isfinite(c.match_floor)) throw ConfigError("config: match_floor must be finite");
  if (c.workers < 1) throw ConfigError("config: workers must be >= 1");
  if (c.prompt_template.find("{sequence}") == std::string::npos ||
      c.prompt_template.find("{captions}") == std::string::npos) {
    throw ConfigError("config: prompt template must contain {sequence} and {captions}");
  }
  c.digest = Sha256Digest(j.dump());
  return c;
}

PipelineConfig LoadConfig(const std::filesystem::path& path) {
  return ConfigFromJson(ParseJsonFile(path), path.parent_path());
}

std::vector<Capability> RequiredCapabilities(bool refine) {
  std::vector<Capability> caps = {Capability::kEmbedImage, Capability::kCaptionImage,
                                  Capability::kAestheticScore};
  if (refine) {
    caps.insert(caps.end(), {Capability::kCaptionSequence, Capability::kRefineCaptions,
                             Capability::kDetect, Capability::kSegment});
  }
  return caps;
}

std::unique_ptr<PerceptionClient> ConnectBackends(const std::vector<BackendDescriptor>& backends,
                                                  const std::filesystem::path& base_dir) {
  auto client = std::make_unique<PerceptionClient>();
  for (const auto& d : backends) {
    auto backend = OpenBackend(d, base_dir);
    client->Register(std::move(backend), d.capabilities, d.max_in_flight);
  }
  return client;
}

std::vector<StoryManifest> ManifestsFromJson(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_array()) throw ConfigError("manifest must be a JSON array of stories");
  std::vector<StoryManifest> out;
  std::set<std::string> ids;
  try {
    for (const auto& s : j) {
      StoryManifest m;
      m.story_id = s.at("story_id").get<std::string>();
      if (m.story_id.empty()) throw ConfigError("manifest: empty story_id");
      if (!ids.insert(m.story_id).second) throw ConfigError("manifest: duplicate story_id " + m.story_id);
      m.frame_paths = s.at("frames").get<std::vector<std::string>>();
      for (const auto& p : m.frame_paths) {
        std::filesystem::path fp = p;
        m.resolved_paths.push_back(fp.is_relative() ? base_dir / fp : fp);
      }
      if (s.contains("source")) m.source = s.at("source");
      out.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  return out;
}

std::vector<StoryManifest> LoadManifests(const std::filesystem::path& path) {
  return ManifestsFromJson(ParseJsonFile(path), path.parent_path());
}

}  // namespace storyline::pipeline
