#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "storyline/backend/client.hpp"
#include "storyline/bench/eval_set.hpp"
#include "storyline/common/thread_pool.hpp"
#include "storyline/model/metric_report.hpp"

namespace storyline::bench {

enum class Task { kGeneration, kContinuation };

std::string_view ToString(Task task);
std::optional<Task> ParseTask(std::string_view text);

inline constexpr std::string_view kPromptPrefix = "Generate an image ";

// "Generate an image " + caption with identity indices removed.
std::string ScenePrompt(std::string_view caption);

// Index of the first scene the model has to produce.
std::size_t FirstGeneratedScene(Task task);

// Drives the model through the item's scenes. Generation: scene 0 from its
// prompt alone, every later scene from (previous generated image, prompt).
// Continuation: the ground-truth scene 0 image seeds scene 1. Throws whatever
// the model client throws.
std::vector<ImageRef> RunTask(const EvalItem& item, Task task, PerceptionClient& model);

struct EvalOptions {
  // Instance consistency over a story: mean of per-frame scores, or the
  // worst frame when set.
  bool instance_story_min = false;
};

// Reference-instance features: embed_image on each reference box.
FeatureSet ReferenceFeatures(PerceptionClient& client, const EvalItem& item);

// All seven scores for one item. `generated[i]` depicts scene
// first_scene + i. A metric whose computation throws is recorded in `errors`
// and left absent; the others are still computed.
MetricReport EvaluateSequence(PerceptionClient& client, const EvalItem& item,
                              std::span<const ImageRef> generated, std::size_t first_scene,
                              const EvalOptions& options = {});

struct BenchmarkSummary {
  int items = 0;
  int failed_items = 0;
  std::map<Metric, double> means;
  // Number of items each mean is over.
  std::map<Metric, int> counts;
  std::string config_digest;

  nlohmann::json ToJson() const;
};

// Per-metric means over the reports that carry the metric, in item order.
// Throws std::invalid_argument for zero reports.
BenchmarkSummary Aggregate(std::span<const MetricReport> reports, int failed_items = 0,
                           std::string config_digest = {});

struct ItemFailure {
  std::string story_id;
  std::string message;
};

struct BenchmarkResult {
  std::vector<MetricReport> reports;
  std::vector<ItemFailure> failures;
  // Absent when every item failed.
  std::optional<BenchmarkSummary> summary;

  // {"summary", "items", "failures"}; instance integrity also shown x100.
  nlohmann::json ToJson() const;
};

struct BenchmarkOptions {
  Task task = Task::kGeneration;
  // Overrides each item's own mode when set.
  std::optional<EvalMode> mode;
  EvalOptions eval;
  std::string config_digest;
};

// Runs and evaluates every item (concurrently on `pool` when given). An
// item whose generation fails is listed in `failures` and skipped.
BenchmarkResult RunBenchmark(std::span<const EvalItem> items, PerceptionClient& perception,
                             PerceptionClient& model, const BenchmarkOptions& options,
                             ThreadPool* pool = nullptr);

}  // namespace storyline::bench
