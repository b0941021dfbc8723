#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace storyline::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Where an annotate run writes its provenance JSON.
std::filesystem::path ProvenancePath(const std::filesystem::path& out);

int CmdAnnotate(const std::filesystem::path& config, const std::filesystem::path& manifest,
                const std::filesystem::path& out, std::ostream& log);

// endpoint: echo | mock:<fixture> | subprocess:<cmd> | unix:<socket> | http://host:port
int CmdBench(const std::filesystem::path& eval_dir, const std::string& endpoint, const std::string& task,
             const std::filesystem::path& report, const std::optional<std::string>& mode,
             bool instance_story_min, std::ostream& log);

int CmdStats(const std::filesystem::path& dataset, const std::filesystem::path& out, std::ostream& log);

int CmdAblateRefine(const std::filesystem::path& config, const std::filesystem::path& manifest,
                    const std::filesystem::path& out, std::ostream& log);

// Blocks serving the fixture until the transport closes (stdio) or the
// process is terminated.
int CmdServeMock(const std::filesystem::path& fixtures, const std::string& transport,
                 const std::string& listen, std::ostream& log);

// Full argument parsing and dispatch; returns the process exit code.
int RunCli(int argc, char** argv);

}  // namespace storyline::cli
