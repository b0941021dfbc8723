// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "storyline/backend/mock_backend.hpp"
#include "storyline/backend/wire.hpp"
#include "storyline/bench/assignment.hpp"
#include "storyline/bench/bleu.hpp"
#include "storyline/bench/eval_set.hpp"
#include "storyline/bench/evaluate.hpp"
#include "storyline/bench/similarity.hpp"
#include "storyline/cli/commands.hpp"
#include "storyline/common/digest.hpp"
#include "storyline/model/mentions.hpp"
#include "storyline/pipeline/stages.hpp"
#include "conformance.hpp"
#include "synthetic.hpp"

namespace storyline {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

// Collects the first few problems a criterion ran into.
struct Outcome {
  int failures = 0;
  std::string first;
  std::string detail;

  void Check(bool ok, const std::string& what) {
    if (ok) return;
    if (failures++ == 0) first = what;
  }
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

EmbeddingVector Vec(std::vector<double> v) { return EmbeddingVector(std::move(v), "t"); }

FeatureSet Set(const std::vector<std::vector<double>>& vs) {
  FeatureSet f;
  for (const auto& v : vs) f.Add(Vec(v), "x");
  return f;
}

// ---- assignment

Outcome AssignmentOracle() {
  Outcome o;
  testing::Rng rng(1001);
  const auto start = Clock::now();
  int cases = 0;
  for (std::size_t n = 2; n <= 7; ++n) {
    for (int trial = 0; trial < 500; ++trial, ++cases) {
      std::vector<double> e(n * n);
      // Every fourth matrix has small integer costs, so ties are common.
      for (auto& x : e) x = trial % 4 == 0 ? rng.Int(0, 4) : rng.Uniform(0.0, 10.0);
      const CostMatrix c(n, n, e);
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      double best = std::numeric_limits<double>::infinity();
      do {
        double cost = 0.0;
        for (std::size_t r = 0; r < n; ++r) cost += c(r, perm[r]);
        best = std::min(best, cost);
      } while (std::next_permutation(perm.begin(), perm.end()));
      const double got = AssignmentCost(c, SolveAssignment(c));
      o.Check(got == best, "n=" + std::to_string(n) + " trial " + std::to_string(trial) + ": " +
                               Fmt("%.17g", got) + " vs " + Fmt("%.17g", best));
    }
  }
  const double secs = Seconds(start);
  o.Check(secs < 30.0, "took " + Fmt("%.2f s", secs));
  o.detail = std::to_string(cases) + " matrices, " + Fmt("%.2f s", secs);
  return o;
}

// ---- similarity

Outcome SimilarityOracle() {
  Outcome o;
  testing::Rng rng(1002);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(rng.Int(1, 10));
    const auto dim = static_cast<std::size_t>(rng.Int(2, 64));
    std::vector<std::vector<double>> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(rng.UnitVector(dim));
      b.push_back(rng.UnitVector(dim));
    }
    double direct = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += a[i][k] * b[i][k];
      direct += dot;
    }
    direct /= static_cast<double>(n);
    const double err = std::abs(bench::MeanPairwiseSimilarity(Set(a), Set(b)) - direct);
    worst = std::max(worst, err);
    o.Check(err <= 1e-12, "trial " + std::to_string(trial) + " off by " + Fmt("%.3g", err));
  }
  o.detail = "1000 sets, max error " + Fmt("%.3g", worst);
  return o;
}

Outcome IntegrityConstants() {
  Outcome o;
  using bench::InstanceIntegrity;
  const auto base = Set({{1, 0, 0}, {0, 1, 0}});
  o.Check(InstanceIntegrity(base, base) == 1.0, "identical != 1.0");
  o.Check(InstanceIntegrity(base, Set({{0, 1, 0}})) == 0.5, "half present != 0.5");
  o.Check(InstanceIntegrity(base, FeatureSet{}) == 0.0, "empty current != 0.0");

  testing::Rng rng(1003);
  std::vector<std::vector<double>> bv, cv;
  for (int i = 0; i < 5; ++i) bv.push_back(rng.UnitVector(8));
  for (int i = 0; i < 4; ++i) cv.push_back(rng.Near(bv[i], 0.3));
  cv.push_back(rng.UnitVector(8));
  const double ref = InstanceIntegrity(Set(bv), Set(cv));
  o.Check(std::abs(InstanceIntegrity(Set(bv), Set(bv)) - 1.0) <= 1e-12, "random identical != 1");
  double spread = 0.0;
  for (int s = 0; s < 100; ++s) {
    auto b = bv, c = cv;
    for (auto* v : {&b, &c}) {
      for (std::size_t i = v->size() - 1; i > 0; --i) std::swap((*v)[i], (*v)[rng.Next() % (i + 1)]);
    }
    spread = std::max(spread, std::abs(InstanceIntegrity(Set(b), Set(c)) - ref));
  }
  o.Check(spread <= 1e-12, "shuffles moved the score by " + Fmt("%.3g", spread));
  o.detail = "1.0 / 0.5 / 0.0 exact, 100 shuffles within " + Fmt("%.3g", spread);
  return o;
}

// ---- filter

Outcome FilterBoundaries() {
  Outcome o;
  using pipeline::FilterMode;
  const pipeline::FilterPolicy p;
  auto frame = [](double score, int instances) {
    pipeline::FrameState f;
    f.frame.aesthetic_score = score;
    f.instances.resize(instances);
    return f;
  };
  auto passes = [&](double score, int instances, FilterMode m) {
    return !pipeline::RejectReason(frame(score, instances), p, m).has_value();
  };
  o.Check(!passes(5.0, 2, FilterMode::kUnique), "unique 5.0 accepted");
  o.Check(passes(5.01, 2, FilterMode::kUnique), "unique 5.01 rejected");
  o.Check(!passes(4.5, 2, FilterMode::kSequence), "sequence 4.5 accepted");
  o.Check(passes(4.51, 2, FilterMode::kSequence), "sequence 4.51 rejected");
  for (const auto m : {FilterMode::kUnique, FilterMode::kSequence}) {
    o.Check(!passes(9.0, 0, m), "0 instances accepted");
    o.Check(passes(9.0, 8, m), "8 instances rejected");
    o.Check(!passes(9.0, 9, m), "9 instances accepted");
  }
  o.detail = "aesthetic and instance-count edges";
  return o;
}

// ---- evaluation on ground truth

Outcome IdentityEvaluation() {
  Outcome o;
  const auto dir = testing::TempDir("accept-identity-eval");
  testing::WriteEvalSet(dir, testing::EvalSetOptions{4, 5});
  const auto items = bench::LoadEvalSet(dir);
  PerceptionClient client;
  client.Register(std::make_shared<MockBackend>(json::parse(ReadFileBytes(dir / "perception.json"))));
  int scored = 0;
  for (const auto& item : items) {
    for (const std::size_t first : {std::size_t{0}, std::size_t{1}}) {
      std::vector<ImageRef> gens;
      for (std::size_t k = first; k < item.scenes.size(); ++k) gens.push_back(item.scenes[k].image);
      const auto r = bench::EvaluateSequence(client, item, gens, first);
      const auto ic = r.Get(item.mode == bench::EvalMode::kSingle ? Metric::kInstanceConsistencySingle
                                                           : Metric::kInstanceConsistencyMulti);
      const std::vector<std::pair<std::string, std::optional<double>>> got = {
          {"semantic", r.Get(Metric::kSemanticAlignment)},
          {"style", r.Get(Metric::kStyleConsistency)},
          {"instance", ic},
          {"bleu4", r.Get(Metric::kBleu4)}};
      for (const auto& [name, v] : got) {
        o.Check(v.has_value() && std::abs(*v - 1.0) <= 1e-9,
                item.story_id + " " + name + " = " + (v ? Fmt("%.12g", *v) : std::string("absent")));
      }
      ++scored;
    }
  }
  o.detail = std::to_string(scored) + " evaluations (generation and continuation spans)";
  return o;
}

Outcome BleuOracle() {
  Outcome o;
  const auto corpus = json::parse(ReadFileBytes(std::filesystem::path(STORYLINE_TEST_DATA) / "bleu_corpus.json"));
  o.Check(corpus.size() >= 50, "corpus has " + std::to_string(corpus.size()) + " pairs");
  double worst = 0.0;
  int zeros = 0;
  for (const auto& c : corpus) {
    const auto refs = c.at("references").get<std::vector<std::string>>();
    const double want = c.at("bleu").get<double>();
    const double err = std::abs(bench::Bleu4(c.at("candidate").get<std::string>(), refs) - want);
    worst = std::max(worst, err);
    if (want < 1e-6) ++zeros;
    o.Check(err <= 1e-6, "\"" + c.at("candidate").get<std::string>() + "\" off by " + Fmt("%.3g", err));
  }
  o.detail = std::to_string(corpus.size()) + " pairs (" + std::to_string(zeros) + " near zero), max error " +
             Fmt("%.3g", worst);
  return o;
}

// ---- pipeline

std::vector<int> Indices(const pipeline::Story& s) {
  std::vector<int> out;
  for (const auto& f : s.frames) out.push_back(f.frame.index);
  return out;
}

Outcome PipelineDeterminism() {
  Outcome o;
  const auto dir = testing::TempDir("accept-determinism");
  const auto corpus = testing::WriteSyntheticCorpus(dir, testing::SyntheticOptions{});
  std::ostringstream log;
  const int a = cli::CmdAnnotate(corpus.config, corpus.manifest, dir / "a.jsonl", log);
  const int b = cli::CmdAnnotate(corpus.config, corpus.manifest, dir / "b.jsonl", log);
  o.Check(a == 0 && b == 0, "annotate exited " + std::to_string(a) + "/" + std::to_string(b) + ": " + log.str());
  const auto ja = ReadFileBytes(dir / "a.jsonl");
  o.Check(!ja.empty(), "no records written");
  o.Check(ja == ReadFileBytes(dir / "b.jsonl"), "JSONL differs between runs");
  o.Check(ReadFileBytes(cli::ProvenancePath(dir / "a.jsonl")) == ReadFileBytes(cli::ProvenancePath(dir / "b.jsonl")),
          "provenance differs between runs");

  testing::Rng rng(1007);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = testing::RandomStory(rng, rng.Int(1, 30));
    const double threshold = rng.Uniform(0.5, 1.0);
    pipeline::Deduplicate(s, threshold);
    const auto deduped = Indices(s);
    pipeline::Deduplicate(s, threshold);
    o.Check(Indices(s) == deduped, "dedup not idempotent, trial " + std::to_string(trial));
    const auto mode = trial % 2 ? pipeline::FilterMode::kUnique : pipeline::FilterMode::kSequence;
    pipeline::FilterStory(s, pipeline::FilterPolicy{}, mode);
    const auto filtered = Indices(s);
    const auto again = pipeline::FilterStory(s, pipeline::FilterPolicy{}, mode);
    o.Check(Indices(s) == filtered && again.kept == static_cast<int>(filtered.size()),
            "filter not idempotent, trial " + std::to_string(trial));
  }
  const auto lines = std::count(ja.begin(), ja.end(), '\n');
  o.detail = "3 stories / " + std::to_string(corpus.frames) + " frames -> " + std::to_string(lines) +
             " identical records; 200 random stories";
  return o;
}

// Two women drawn from authored clusters, listed in varying order, one of
// them absent from frame 3.
Outcome IdentityAlignment() {
  Outcome o;
  testing::Rng rng(1008);
  const auto a = rng.UnitVector(12);
  const auto b = rng.UnitVector(12);
  // Cluster member per detection, frame by frame.
  const std::vector<std::vector<int>> cast = {{0, 1}, {1, 0}, {0, 1}, {1}, {1, 0}};
  const std::vector<std::pair<std::string, std::string>> captions = {
      {"woman0 waves at woman1", "woman waves at woman"},
      {"woman1 raises her hand0 and hand1 toward woman0", "woman raises her hand and hand toward woman"},
      {"woman0 hands cup0 to woman1", "woman hands cup to woman"},
      {"woman1 walks alone past the fountain", "woman walks alone past the fountain"},
      {"woman1 and woman0 sit together", "woman and woman sit together"}};

  pipeline::Story story;
  story.story_id = "align";
  for (std::size_t i = 0; i < cast.size(); ++i) {
    pipeline::FrameState f;
    f.frame.story_id = story.story_id;
    f.frame.index = static_cast<int>(i);
    f.frame.frame_id = "align#" + std::to_string(i);
    for (const int who : cast[i]) {
      f.detections.push_back(Detection{"woman", {0, 0, 1, 1}, 0.9});
      f.appearances.push_back(Vec(rng.Near(who == 0 ? a : b, 0.15)));
      f.faces.push_back(std::nullopt);
    }
    story.frames.push_back(std::move(f));
  }
  const double floor = 0.55;
  pipeline::AlignInstanceIdentities(story, floor);

  // Brute force over every detection -> identity map, against identity
  // means kept independently here.
  std::vector<std::vector<double>> sums;
  std::map<int, int> index_of_cluster;
  for (std::size_t i = 0; i < story.frames.size(); ++i) {
    const auto& f = story.frames[i];
    const std::size_t n = f.detections.size();
    std::vector<int> want(n, -1);
    if (!sums.empty()) {
      std::vector<std::size_t> perm(std::max(n, sums.size()));
      std::iota(perm.begin(), perm.end(), 0);
      double best = -1e300;
      std::vector<int> best_map;
      do {
        double total = 0.0;
        std::vector<int> m(n, -1);
        for (std::size_t d = 0; d < n; ++d) {
          if (perm[d] >= sums.size()) continue;
          const double s = Cosine(f.appearances[d], Vec(sums[perm[d]]));
          total += s;
          if (s >= floor) m[d] = static_cast<int>(perm[d]);
        }
        if (total > best + 1e-12) {
          best = total;
          best_map = m;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
      want = best_map;
    }
    for (std::size_t d = 0; d < n; ++d) {
      if (want[d] < 0) {
        want[d] = static_cast<int>(sums.size());
        sums.emplace_back(f.appearances[d].dim(), 0.0);
      }
      const auto unit = f.appearances[d].Normalize();
      for (std::size_t k = 0; k < unit.dim(); ++k) sums[want[d]][k] += unit.values()[k];
    }
    o.Check(f.identities == want, "frame " + std::to_string(i) + " differs from brute force");
    for (std::size_t d = 0; d < n; ++d) {
      const auto [it, fresh] = index_of_cluster.emplace(cast[i][d], f.identities[d]);
      o.Check(fresh || it->second == f.identities[d], "cluster changed index at frame " + std::to_string(i));
    }

    // The caption names exactly the women the frame shows, by index.
    std::set<std::string> named, shown;
    for (const auto& m : FindIndexedMentions(captions[i].first)) {
      if (m.label == "woman") named.insert(IdentityRef{m.label, *m.identity_index}.Name());
    }
    for (std::size_t d = 0; d < n; ++d) shown.insert(IdentityRef{"woman", f.identities[d]}.Name());
    o.Check(named == shown, "frame " + std::to_string(i) + " caption names other women");
  }
  o.Check(index_of_cluster.size() == 2 && index_of_cluster[0] == 0 && index_of_cluster[1] == 1,
          "clusters are not woman0/woman1");
  o.Check(story.identities.size() == 2, std::to_string(story.identities.size()) + " identities");

  std::vector<std::string> hands;
  for (const auto& m : FindIndexedMentions(captions[1].first)) {
    if (m.label == "hand") hands.push_back(IdentityRef{m.label, *m.identity_index}.Name());
  }
  o.Check(hands == std::vector<std::string>{"hand0", "hand1"}, "hands not hand0, hand1");
  for (const auto& [refined, plain] : captions) {
    o.Check(pipeline::StripIdentityIndices(refined) == plain, "strip(\"" + refined + "\")");
  }
  o.detail = "5 frames, 2 identities, brute-force agreement and stable indices";
  return o;
}

// ---- task protocol

Outcome TaskProtocol() {
  Outcome o;
  const auto golden = std::filesystem::path(STORYLINE_TEST_DATA) / "golden";
  int transcripts = 0;
  for (const auto task : {bench::Task::kGeneration, bench::Task::kContinuation}) {
    for (int k = 2; k <= 5; ++k, ++transcripts) {
      const auto name = testing::TaskGoldenName(task, k);
      const auto t = testing::TaskTranscript(task, k);
      o.Check(t.requests == ReadFileBytes(golden / (name + ".requests.frames")), name + " requests differ");
      o.Check(t.responses == ReadFileBytes(golden / (name + ".responses.frames")), name + " responses differ");
      const auto frames = wire::SplitFrames(t.requests);
      const auto item = testing::GoldenTaskItem(k);
      const std::size_t want = task == bench::Task::kGeneration ? k : k - 1;
      o.Check(frames.size() == want, name + ": " + std::to_string(frames.size()) + " calls");
      const std::size_t first = bench::FirstGeneratedScene(task);
      for (std::size_t i = 0; i < frames.size() && first + i < item.scenes.size(); ++i) {
        const auto text = wire::Parse(frames[i])["payload"]["context"].back()["text"].get<std::string>();
        o.Check(text == "Generate an image " + pipeline::StripIdentityIndices(item.scenes[first + i].caption),
                name + " prompt " + std::to_string(i) + ": " + text);
      }
    }
  }
  o.detail = std::to_string(transcripts) + " transcripts against goldens";
  return o;
}

// ---- throughput

Outcome Throughput() {
  Outcome o;
  const auto dir = testing::TempDir("accept-throughput");
  testing::SyntheticOptions opts;
  opts.stories = 50;
  opts.frames_per_story = 100;
  opts.seed = 1010;
  const auto corpus = testing::WriteSyntheticCorpus(dir, opts);
  std::ostringstream log;
  const auto start = Clock::now();
  const int rc = cli::CmdAnnotate(corpus.config, corpus.manifest, dir / "out.jsonl", log);
  const double secs = Seconds(start);
  o.Check(rc == 0, "annotate exited " + std::to_string(rc));
  const auto prov = json::parse(ReadFileBytes(cli::ProvenancePath(dir / "out.jsonl")));
  const int frames = prov["counts"]["frames_ingested"].get<int>();
  o.Check(frames == 5000, std::to_string(frames) + " frames ingested");
  const double rate = frames / secs;
  o.Check(rate >= 200.0, Fmt("%.1f frames/s", rate));
  o.detail = std::to_string(frames) + " frames in " + Fmt("%.2f s", secs) + " = " + Fmt("%.1f frames/s", rate) +
             " on " + std::to_string(std::thread::hardware_concurrency()) + " hardware thread(s)";
  return o;
}

}  // namespace
}  // namespace storyline

int main() {
  using namespace storyline;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"assignment-oracle", AssignmentOracle},
      {"similarity-oracle", SimilarityOracle},
      {"instance-integrity-constants", IntegrityConstants},
      {"filter-boundaries", FilterBoundaries},
      {"identity-evaluation", IdentityEvaluation},
      {"bleu4-oracle", BleuOracle},
      {"pipeline-determinism", PipelineDeterminism},
      {"identity-alignment", IdentityAlignment},
      {"task-protocol", TaskProtocol},
      {"throughput", Throughput},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.Check(false, std::string("threw: ") + e.what());
    }
    if (o.failures) ++failed;
    std::cout << (o.failures ? "FAIL " : "PASS ") << name << ": " << o.detail;
    if (o.failures) std::cout << " [" << o.failures << " problem(s); first: " << o.first << "]";
    std::cout << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
