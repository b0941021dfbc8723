#include "storyline/pipeline/orchestrator.hpp"

#include <algorithm>

#include "storyline/common/log.hpp"

namespace storyline::pipeline {

using nlohmann::json;

int RunResult::failed() const {
  return static_cast<int>(std::count_if(stories.begin(), stories.end(),
                                        [](const StoryOutcome& s) { return s.failure.has_value(); }));
}

Pipeline::Pipeline(PipelineConfig config, PerceptionClient* client, RunOptions options)
    : config_(std::move(config)), client_(client), options_(options) {
  client_->Require(RequiredCapabilities(options_.refine));
  frame_pool_ = std::make_unique<ThreadPool>(config_.workers);
  story_pool_ = std::make_unique<ThreadPool>(config_.workers);
}

Pipeline::~Pipeline() = default;

RecordProvenance Pipeline::BaseProvenance() const {
  RecordProvenance p;
  p.backends = client_->BackendIds();
  p.pipeline_version = std::string(kPipelineVersion);
  p.parameters = {{"dedup_threshold", config_.dedup_threshold},
                  {"detection_confidence_min", config_.policy.detection_confidence_min},
                  {"match_floor", config_.match_floor},
                  {"aesthetic_threshold", config_.policy.AestheticThreshold(config_.mode)}};
  return p;
}

StoryOutcome Pipeline::Annotate(const StoryManifest& manifest) {
  const StageContext ctx{client_, frame_pool_.get(), &config_};
  StoryOutcome out;
  out.story_id = manifest.story_id;
  Story story = IngestStory(manifest);
  out.frames_ingested = static_cast<int>(story.frames.size());
  EmbedFrames(story, ctx);
  Deduplicate(story, config_.dedup_threshold);
  out.frames_after_dedup = static_cast<int>(story.frames.size());
  CaptionFrames(story, ctx);
  ScoreFrames(story, ctx);
  if (options_.refine) {
    RefineStoryCaptions(story, ctx);
    DetectStory(story, ctx);
    AlignInstanceIdentities(story, config_.match_floor);
    SegmentInstances(story, ctx);
    out.counts = FilterStory(story, config_.policy, config_.mode);
  } else {
    FilterPolicy policy = config_.policy;
    policy.min_instances = 0;
    for (auto& f : story.frames) {
      f.caption_refined = f.caption_raw;
      f.caption_refined.kind = CaptionKind::kRefined;
    }
    out.counts = FilterStory(story, policy, config_.mode);
  }
  out.story = std::move(story);
  return out;
}

RunResult Pipeline::Run(const std::vector<StoryManifest>& manifests, RecordSink& sink) {
  auto outcomes = ParallelMap(story_pool_.get(), manifests.size(), [&](std::size_t i) {
    const auto& m = manifests[i];
    try {
      return Annotate(m);
    } catch (const StageError& e) {
      log::Warn(e.what());
      StoryOutcome o;
      o.story_id = m.story_id;
      o.failure = StoryFailure{e.story_id(), e.frame_id(), e.stage(), e.backend_id(), e.what()};
      return o;
    } catch (const std::exception& e) {
      log::Warn(std::string("story ") + m.story_id + ": " + e.what());
      StoryOutcome o;
      o.story_id = m.story_id;
      o.failure = StoryFailure{m.story_id, "", "ingest", "", e.what()};
      return o;
    }
  });
  std::sort(outcomes.begin(), outcomes.end(),
            [](const StoryOutcome& a, const StoryOutcome& b) { return a.story_id < b.story_id; });

  RunResult result;
  const auto base = BaseProvenance();
  for (auto& o : outcomes) {
    if (o.failure) continue;
    try {
      result.records_written += ExportRecords(o.story, base, sink);
    } catch (const StageError& e) {
      o.failure = StoryFailure{e.story_id(), e.frame_id(), e.stage(), e.backend_id(), e.what()};
      o.story.frames.clear();
    }
  }
  sink.Close();

  FilterCounts totals;
  int ingested = 0;
  int after_dedup = 0;
  json stories = json::array();
  json failures = json::array();
  for (const auto& o : outcomes) {
    json s{{"story_id", o.story_id}};
    if (o.failure) {
      s["status"] = "failed";
      failures.push_back({{"story_id", o.failure->story_id},
                          {"frame_id", o.failure->frame_id},
                          {"stage", o.failure->stage},
                          {"backend", o.failure->backend_id},
                          {"message", o.failure->message}});
    } else {
      s["status"] = "ok";
      s["frames_ingested"] = o.frames_ingested;
      s["frames_after_dedup"] = o.frames_after_dedup;
      s["filter"] = o.counts.ToJson();
      totals += o.counts;
      ingested += o.frames_ingested;
      after_dedup += o.frames_after_dedup;
    }
    stories.push_back(std::move(s));
  }
  json params = json::object();
  for (const auto& [k, v] : base.parameters) params[k] = v;
  params["min_instances"] = config_.policy.min_instances;
  params["max_instances"] = config_.policy.max_instances;
  result.provenance = {{"pipeline_version", base.pipeline_version},
                       {"config_digest", config_.digest},
                       {"mode", ToString(config_.mode)},
                       {"refine", options_.refine},
                       {"backends", base.backends},
                       {"parameters", params},
                       {"counts",
                        {{"stories", static_cast<int>(outcomes.size())},
                         {"stories_failed", static_cast<int>(failures.size())},
                         {"frames_ingested", ingested},
                         {"frames_after_dedup", after_dedup},
                         {"records", result.records_written},
                         {"filter", totals.ToJson()}}},
                       {"stories", stories},
                       {"failures", failures}};
  result.stories = std::move(outcomes);
  return result;
}

}  // namespace storyline::pipeline
