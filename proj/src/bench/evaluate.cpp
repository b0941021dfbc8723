#include "storyline/bench/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "storyline/bench/bleu.hpp"
#include "storyline/bench/similarity.hpp"
#include "storyline/common/log.hpp"
#include "storyline/pipeline/stages.hpp"

namespace storyline::bench {

using nlohmann::json;

std::string_view ToString(Task task) { return task == Task::kGeneration ? "generation" : "continuation"; }

std::optional<Task> ParseTask(std::string_view text) {
  if (text == "generation") return Task::kGeneration;
  if (text == "continuation") return Task::kContinuation;
  return std::nullopt;
}

std::string ScenePrompt(std::string_view caption) {
  return std::string(kPromptPrefix) + pipeline::StripIdentityIndices(caption);
}

std::size_t FirstGeneratedScene(Task task) { return task == Task::kGeneration ? 0 : 1; }

std::vector<ImageRef> RunTask(const EvalItem& item, Task task, PerceptionClient& model) {
  std::vector<ImageRef> out;
  std::optional<ImageRef> previous;
  if (task == Task::kContinuation) previous = item.scenes.front().image;
  for (std::size_t k = FirstGeneratedScene(task); k < item.scenes.size(); ++k) {
    std::vector<ContextPart> context;
    if (previous) context.push_back(ContextPart{std::nullopt, previous});
    context.push_back(ContextPart{ScenePrompt(item.scenes[k].caption), std::nullopt});
    previous = model.GenerateImage(context);
    out.push_back(*previous);
  }
  return out;
}

FeatureSet ReferenceFeatures(PerceptionClient& client, const EvalItem& item) {
  FeatureSet refs;
  for (const auto& r : item.references) refs.Add(client.EmbedImage(r.image, r.bbox), r.label);
  return refs;
}

MetricReport EvaluateSequence(PerceptionClient& client, const EvalItem& item,
                              std::span<const ImageRef> generated, std::size_t first_scene,
                              const EvalOptions& options) {
  if (generated.empty() || first_scene + generated.size() > item.scenes.size()) {
    throw std::invalid_argument("evaluate: " + std::to_string(generated.size()) +
                                " generated images do not fit the item's scenes");
  }
  MetricReport report;
  report.story_id = item.story_id;
  auto caption = [&](std::size_t i) { return pipeline::StripIdentityIndices(item.scenes[first_scene + i].caption); };
  auto guarded = [&](Metric m, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report.scores.erase(m);
      report.errors[m] = e.what();
    }
  };

  guarded(Metric::kSemanticAlignment, [&] {
    double sum = 0.0;
    for (std::size_t i = 0; i < generated.size(); ++i) sum += SemanticAlignment(client, generated[i], caption(i));
    report.Set(Metric::kSemanticAlignment, sum / static_cast<double>(generated.size()));
  });
  guarded(Metric::kBackgroundConsistency, [&] {
    report.Set(Metric::kBackgroundConsistency,
               BackgroundConsistency(client, item.scenes.front().image, generated));
  });
  guarded(Metric::kStyleConsistency, [&] {
    if (auto s = StyleConsistency(client, generated)) report.Set(Metric::kStyleConsistency, *s);
  });

  // Instance metrics share the reference features and the per-image crops.
  std::optional<FeatureSet> refs;
  std::vector<FeatureSet> crops;
  std::string instance_error;
  try {
    refs = ReferenceFeatures(client, item);
    const auto labels = item.Labels();
    for (const auto& g : generated) crops.push_back(ExtractInstanceFeatures(client, g, labels));
  } catch (const std::exception& e) {
    instance_error = e.what();
  }
  const Metric consistency =
      item.mode == EvalMode::kSingle ? Metric::kInstanceConsistencySingle : Metric::kInstanceConsistencyMulti;
  if (!instance_error.empty()) {
    report.errors[consistency] = instance_error;
    report.errors[Metric::kInstanceIntegrity] = instance_error;
  } else {
    guarded(consistency, [&] {
      std::vector<double> scores;
      bool missing = false;
      for (const auto& c : crops) {
        const auto s = InstanceConsistency(*refs, c, item.mode);
        missing = missing || s.no_instance;
        scores.push_back(s.score);
      }
      double v = 0.0;
      if (options.instance_story_min) {
        v = *std::min_element(scores.begin(), scores.end());
      } else {
        for (double s : scores) v += s;
        v /= static_cast<double>(scores.size());
      }
      report.Set(consistency, v);
      if (missing) report.flags[consistency] = "no_instance";
    });
    guarded(Metric::kInstanceIntegrity, [&] {
      double sum = 0.0;
      for (const auto& c : crops) sum += InstanceIntegrity(*refs, c);
      report.Set(Metric::kInstanceIntegrity, sum / static_cast<double>(crops.size()));
    });
  }

  guarded(Metric::kBleu4, [&] {
    double sum = 0.0;
    for (std::size_t i = 0; i < generated.size(); ++i) {
      const auto recaption = client.CaptionImage(generated[i]);
      const std::vector<std::string> refs_text = {caption(i)};
      sum += Bleu4(recaption.text, refs_text);
    }
    report.Set(Metric::kBleu4, sum / static_cast<double>(generated.size()));
  });
  return report;
}

json BenchmarkSummary::ToJson() const {
  json m = json::object();
  for (const auto metric : kAllMetrics) {
    const auto name = std::string(MetricName(metric));
    const auto it = means.find(metric);
    const int n = counts.contains(metric) ? counts.at(metric) : 0;
    m[name] = {{"mean", it == means.end() ? json(nullptr) : json(it->second)}, {"count", n}};
  }
  return {{"items", items}, {"failed_items", failed_items}, {"metrics", m}, {"config_digest", config_digest}};
}

BenchmarkSummary Aggregate(std::span<const MetricReport> reports, int failed_items, std::string config_digest) {
  if (reports.empty()) throw std::invalid_argument("aggregate: no reports");
  BenchmarkSummary s;
  s.items = static_cast<int>(reports.size());
  s.failed_items = failed_items;
  s.config_digest = std::move(config_digest);
  std::map<Metric, double> sums;
  for (const auto metric : kAllMetrics) s.counts[metric] = 0;
  for (const auto& r : reports) {
    for (const auto& [metric, v] : r.scores) {
      if (!std::isfinite(v)) continue;
      sums[metric] += v;
      ++s.counts[metric];
    }
  }
  for (const auto& [metric, sum] : sums) s.means[metric] = sum / s.counts[metric];
  return s;
}

json BenchmarkResult::ToJson() const {
  json items = json::array();
  for (const auto& r : reports) {
    auto j = storyline::ToJson(r);
    if (auto v = r.Get(Metric::kInstanceIntegrity)) j["instance_integrity_percent"] = *v * 100.0;
    items.push_back(std::move(j));
  }
  json failed = json::array();
  for (const auto& f : failures) failed.push_back({{"story_id", f.story_id}, {"message", f.message}});
  json summary_json = nullptr;
  if (summary) {
    summary_json = summary->ToJson();
    const auto it = summary->means.find(Metric::kInstanceIntegrity);
    if (it != summary->means.end()) summary_json["instance_integrity_percent"] = it->second * 100.0;
  }
  return {{"summary", summary_json}, {"items", items}, {"failures", failed}};
}

BenchmarkResult RunBenchmark(std::span<const EvalItem> items, PerceptionClient& perception,
                             PerceptionClient& model, const BenchmarkOptions& options, ThreadPool* pool) {
  struct Outcome {
    std::optional<MetricReport> report;
    std::optional<ItemFailure> failure;
  };
  auto outcomes = ParallelMap(pool, items.size(), [&](std::size_t i) {
    EvalItem item = items[i];
    if (options.mode) item.mode = *options.mode;
    Outcome o;
    std::vector<ImageRef> generated;
    try {
      generated = RunTask(item, options.task, model);
    } catch (const std::exception& e) {
      log::Warn("item " + item.story_id + ": generation failed: " + e.what());
      o.failure = ItemFailure{item.story_id, e.what()};
      return o;
    }
    o.report = EvaluateSequence(perception, item, generated, FirstGeneratedScene(options.task), options.eval);
    return o;
  });
  BenchmarkResult result;
  for (auto& o : outcomes) {
    if (o.report) result.reports.push_back(std::move(*o.report));
    if (o.failure) result.failures.push_back(std::move(*o.failure));
  }
  if (!result.reports.empty()) {
    result.summary = Aggregate(result.reports, static_cast<int>(result.failures.size()), options.config_digest);
  }
  return result;
}

}  // namespace storyline::bench
