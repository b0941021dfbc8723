#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "storyline/backend/client.hpp"
#include "storyline/pipeline/config.hpp"
#include "storyline/pipeline/export.hpp"
#include "storyline/pipeline/stages.hpp"

namespace storyline::pipeline {

struct RunOptions {
  // false: stop after captioning and scoring; refined captions mirror the raw
  // ones and only the aesthetic rule filters.
  bool refine = true;
};

struct StoryFailure {
  std::string story_id;
  std::string frame_id;
  std::string stage;
  std::string backend_id;
  std::string message;
};

struct StoryOutcome {
  std::string story_id;
  int frames_ingested = 0;
  int frames_after_dedup = 0;
  FilterCounts counts;
  std::optional<StoryFailure> failure;
  // Surviving frames; empty on failure.
  Story story;
};

struct RunResult {
  // Sorted by story_id.
  std::vector<StoryOutcome> stories;
  int records_written = 0;
  nlohmann::json provenance;

  int failed() const;
};

class Pipeline {
 public:
  // `client` must outlive the pipeline and carry every required capability.
  Pipeline(PipelineConfig config, PerceptionClient* client, RunOptions options = {});
  ~Pipeline();

  // Runs every stage on one story; throws StageError (or PreconditionError
  // for a malformed manifest entry).
  StoryOutcome Annotate(const StoryManifest& manifest);

  // Annotates all stories concurrently and exports survivors to `sink` in
  // (story_id, frame index) order. A failed story contributes no records.
  RunResult Run(const std::vector<StoryManifest>& manifests, RecordSink& sink);

  const PipelineConfig& config() const { return config_; }
  RecordProvenance BaseProvenance() const;

 private:
  PipelineConfig config_;
  PerceptionClient* client_;
  RunOptions options_;
  std::unique_ptr<ThreadPool> frame_pool_;
  std::unique_ptr<ThreadPool> story_pool_;
};

}  // namespace storyline::pipeline
