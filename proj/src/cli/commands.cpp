#include "storyline/cli/commands.hpp"

#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "storyline/backend/mock_backend.hpp"
#include "storyline/backend/transport.hpp"
#include "storyline/bench/evaluate.hpp"
#include "storyline/bench/metrics.hpp"
#include "storyline/common/digest.hpp"
#include "storyline/common/errors.hpp"
#include "storyline/pipeline/orchestrator.hpp"
#include "storyline/stats/stats.hpp"

namespace storyline::cli {

using nlohmann::json;

namespace {

void WriteJson(const std::filesystem::path& path, const json& j) { WriteFileAtomic(path, j.dump(2) + "\n"); }

// Maps an exception escaping a command to its exit code.
int ExitFor(const std::exception& e, std::ostream& log) {
  log << "error: " << e.what() << std::endl;
  if (dynamic_cast<const ConfigError*>(&e) != nullptr || dynamic_cast<const CapabilityError*>(&e) != nullptr) {
    return kExitUsage;
  }
  return kExitRuntime;
}

void ReportFailures(const pipeline::RunResult& result, std::ostream& log) {
  for (const auto& s : result.stories) {
    if (!s.failure) continue;
    log << "story " << s.story_id << " failed in stage " << s.failure->stage;
    if (!s.failure->frame_id.empty()) log << " (frame " << s.failure->frame_id << ")";
    log << ": " << s.failure->message << std::endl;
  }
}

std::string ModelLocator(const std::string& endpoint) {
  return endpoint == "echo" ? "builtin:echo-generator" : endpoint;
}

}  // namespace

std::filesystem::path ProvenancePath(const std::filesystem::path& out) {
  return out.string() + ".provenance.json";
}

int CmdAnnotate(const std::filesystem::path& config_path, const std::filesystem::path& manifest_path,
                const std::filesystem::path& out, std::ostream& log) {
  try {
    auto config = pipeline::LoadConfig(config_path);
    const auto manifests = pipeline::LoadManifests(manifest_path);
    auto client = pipeline::ConnectBackends(config.backends, config.base_dir);
    pipeline::Pipeline p(std::move(config), client.get());
    pipeline::JsonlFileSink sink(out);
    const auto result = p.Run(manifests, sink);
    WriteJson(ProvenancePath(out), result.provenance);
    log << "annotate: " << result.stories.size() << " stories, " << result.failed() << " failed, "
        << result.records_written << " records" << std::endl;
    ReportFailures(result, log);
    return result.failed() == 0 ? kExitOk : kExitRuntime;
  } catch (const std::exception& e) {
    return ExitFor(e, log);
  }
}

int CmdBench(const std::filesystem::path& eval_dir, const std::string& endpoint, const std::string& task_name,
             const std::filesystem::path& report, const std::optional<std::string>& mode_name,
             bool instance_story_min, std::ostream& log) {
  try {
    bench::BenchmarkOptions options;
    const auto task = bench::ParseTask(task_name);
    if (!task) throw ConfigError("--task must be generation or continuation, got '" + task_name + "'");
    options.task = *task;
    if (mode_name) {
      options.mode = bench::ParseEvalMode(*mode_name);
      if (!options.mode) throw ConfigError("--mode must be single or multi, got '" + *mode_name + "'");
    }
    options.eval.instance_story_min = instance_story_min;

    const auto items = bench::LoadEvalSet(eval_dir);
    const auto backends_path = eval_dir / "backends.json";
    json backends_json;
    try {
      backends_json = json::parse(ReadFileBytes(backends_path));
    } catch (const std::exception& e) {
      throw ConfigError(backends_path.string() + ": " + e.what());
    }
    std::vector<BackendDescriptor> backends;
    try {
      for (const auto& b : backends_json) backends.push_back(DescriptorFromJson(b));
    } catch (const json::exception& e) {
      throw ConfigError(backends_path.string() + ": " + e.what());
    }
    auto perception = pipeline::ConnectBackends(backends, eval_dir);
    const std::vector<Capability> needed = {Capability::kEmbedImage, Capability::kEmbedText,
                                            Capability::kCaptionImage, Capability::kDetect,
                                            Capability::kSegment, Capability::kInpaint};
    perception->Require(needed);

    BackendDescriptor model_desc{"model-under-test", {Capability::kGenerateImage}, ModelLocator(endpoint), 0};
    std::shared_ptr<Backend> model_backend;
    try {
      model_backend = OpenBackend(model_desc, std::filesystem::current_path());
    } catch (const TransportError& e) {
      log << "error: endpoint unreachable: " << e.what() << std::endl;
      return kExitRuntime;
    }
    PerceptionClient model;
    model.Register(model_backend, {Capability::kGenerateImage});

    options.config_digest = Sha256Digest(json{{"task", bench::ToString(options.task)},
                                              {"mode", mode_name.value_or("")},
                                              {"instance_story_min", instance_story_min},
                                              {"endpoint", endpoint},
                                              {"backends", backends_json}}
                                             .dump());
    ThreadPool pool(4);
    const auto result = bench::RunBenchmark(items, *perception, model, options, &pool);
    WriteJson(report, result.ToJson());
    log << "bench: " << items.size() << " items, " << result.failures.size() << " failed" << std::endl;
    for (const auto& f : result.failures) log << "item " << f.story_id << " failed: " << f.message << std::endl;
    return result.reports.empty() ? kExitRuntime : kExitOk;
  } catch (const std::exception& e) {
    return ExitFor(e, log);
  }
}

int CmdStats(const std::filesystem::path& dataset, const std::filesystem::path& out, std::ostream& log) {
  try {
    std::ifstream in(dataset, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + dataset.string());
    const auto report = stats::ComputeStats(in);
    if (report.records == 0) {
      log << "error: " << dataset.string() << ": no valid records (" << report.invalid_lines << " invalid lines)"
          << std::endl;
      return kExitUsage;
    }
    WriteJson(out, report.ToJson());
    log << "stats: " << report.records << " records, " << report.invalid_lines << " invalid lines" << std::endl;
    return kExitOk;
  } catch (const std::exception& e) {
    return ExitFor(e, log);
  }
}

int CmdAblateRefine(const std::filesystem::path& config_path, const std::filesystem::path& manifest_path,
                    const std::filesystem::path& out, std::ostream& log) {
  try {
    auto config = pipeline::LoadConfig(config_path);
    const auto manifests = pipeline::LoadManifests(manifest_path);
    auto client = pipeline::ConnectBackends(config.backends, config.base_dir);
    const std::vector<Capability> extra = {Capability::kEmbedText};
    client->Require(extra);
    client->Require(pipeline::RequiredCapabilities(true));

    json runs = json::object();
    bool failed = false;
    for (const bool refine : {false, true}) {
      pipeline::Pipeline p(config, client.get(), pipeline::RunOptions{refine});
      pipeline::MemorySink sink;
      const auto result = p.Run(manifests, sink);
      ReportFailures(result, log);
      failed = failed || result.failed() > 0;
      double sum = 0.0;
      int n = 0;
      for (const auto& s : result.stories) {
        for (const auto& f : s.story.frames) {
          const auto text = refine ? pipeline::StripIdentityIndices(f.caption_refined.text) : f.caption_raw.text;
          sum += bench::SemanticAlignment(*client, f.ImageForBackend(), text);
          ++n;
        }
      }
      runs[refine ? "refined" : "raw"] = {{"frames", n}, {"semantic_alignment", n == 0 ? json(nullptr) : json(sum / n)}};
    }
    WriteJson(out, {{"config_digest", config.digest}, {"captions", runs}});
    log << "ablate-refine: raw " << runs["raw"]["semantic_alignment"].dump() << ", refined "
        << runs["refined"]["semantic_alignment"].dump() << std::endl;
    return failed ? kExitRuntime : kExitOk;
  } catch (const std::exception& e) {
    return ExitFor(e, log);
  }
}

int CmdServeMock(const std::filesystem::path& fixtures, const std::string& transport, const std::string& listen,
                 std::ostream& log) {
  try {
    std::shared_ptr<Backend> backend = MockBackend::FromFile(fixtures);
    if (transport == "stdio") {
      ServeStream(*backend, 0, 1);
      return kExitOk;
    }
    if (transport == "unix") {
      if (listen.empty()) throw ConfigError("--listen <socket path> is required for unix transport");
      ServeUnix(*backend, listen);
      return kExitOk;
    }
    if (transport == "http") {
      std::string host = "127.0.0.1";
      int port = 8080;
      if (!listen.empty()) {
        const auto colon = listen.rfind(':');
        try {
          if (colon == std::string::npos) {
            port = std::stoi(listen);
          } else {
            host = listen.substr(0, colon);
            port = std::stoi(listen.substr(colon + 1));
          }
        } catch (const std::exception&) {
          throw ConfigError("--listen must be host:port, got '" + listen + "'");
        }
      }
      HttpServer server(backend);
      log << "serving on http://" << host << ":" << port << std::endl;
      server.Run(host, port);
      return kExitOk;
    }
    throw ConfigError("--transport must be stdio, http or unix");
  } catch (const std::exception& e) {
    return ExitFor(e, log);
  }
}

int RunCli(int argc, char** argv) {
  CLI::App app{"storyline: instance-annotated story dataset pipeline and coherence benchmark"};
  app.require_subcommand(1);

  std::string config, manifest, out, eval_dir, endpoint, task, report, dataset, fixtures, transport = "stdio",
                                                                                          listen;
  std::optional<std::string> mode;
  bool story_min = false;

  auto* annotate = app.add_subcommand("annotate", "Run the annotation pipeline over a manifest");
  annotate->add_option("--config", config, "Pipeline config JSON")->required();
  annotate->add_option("--manifest", manifest, "Story manifest JSON")->required();
  annotate->add_option("--out", out, "Output JSONL path (provenance goes to <out>.provenance.json)")->required();

  auto* bench_cmd = app.add_subcommand("bench", "Run the coherence benchmark against a generation endpoint");
  bench_cmd->add_option("--eval", eval_dir, "Eval set directory (items/*.json, backends.json)")->required();
  bench_cmd->add_option("--endpoint", endpoint,
                        "Model endpoint: echo, mock:<fixture>, subprocess:<cmd>, unix:<socket>, http://host:port")
      ->required();
  bench_cmd->add_option("--task", task, "generation or continuation")->required();
  bench_cmd->add_option("--report", report, "Report JSON path")->required();
  bench_cmd->add_option("--mode", mode, "single or multi; overrides each item's mode");
  bench_cmd->add_flag("--instance-story-min", story_min,
                      "Aggregate instance consistency by the worst frame instead of the mean");

  auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics from an annotated JSONL file");
  stats_cmd->add_option("--dataset", dataset, "Annotated JSONL")->required();
  stats_cmd->add_option("--out", out, "StatsReport JSON path")->required();

  auto* ablate = app.add_subcommand("ablate-refine", "Semantic alignment of raw vs refined captions");
  ablate->add_option("--config", config, "Pipeline config JSON")->required();
  ablate->add_option("--manifest", manifest, "Story manifest JSON")->required();
  ablate->add_option("--out", out, "Result JSON path")->required();

  auto* serve = app.add_subcommand("serve-mock", "Serve a fixture-driven mock backend");
  serve->add_option("--fixtures", fixtures, "Fixture JSON")->required();
  serve->add_option("--transport", transport, "stdio, http or unix")->capture_default_str();
  serve->add_option("--listen", listen, "host:port for http, socket path for unix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  // stdout stays free for frames when serving over stdio.
  auto& log = serve->parsed() ? std::cerr : std::cout;
  if (annotate->parsed()) return CmdAnnotate(config, manifest, out, log);
  if (bench_cmd->parsed()) return CmdBench(eval_dir, endpoint, task, report, mode, story_min, log);
  if (stats_cmd->parsed()) return CmdStats(dataset, out, log);
  if (ablate->parsed()) return CmdAblateRefine(config, manifest, out, log);
  if (serve->parsed()) return CmdServeMock(fixtures, transport, listen, log);
  return kExitUsage;
}

}  // namespace storyline::cli
