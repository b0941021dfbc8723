#pragma once

#include <sys/types.h>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "storyline/backend/backend.hpp"

namespace storyline {

// Backend reached over a framed byte stream: a child process's stdio or a
// local socket. Requests are multiplexed; responses are matched by
// request_id and may arrive in any order.
class StreamBackend : public Backend {
 public:
  // Runs `command` through /bin/sh and talks to it over stdin/stdout.
  static std::shared_ptr<StreamBackend> Spawn(const std::string& command);
  static std::shared_ptr<StreamBackend> ConnectUnix(const std::string& socket_path);

  ~StreamBackend() override;
  StreamBackend(const StreamBackend&) = delete;
  StreamBackend& operator=(const StreamBackend&) = delete;

  const Handshake& handshake() const override { return handshake_; }
  nlohmann::json Invoke(Capability capability, const nlohmann::json& payload) override;

  void set_timeout(std::chrono::milliseconds timeout) { timeout_ = timeout; }

 private:
  StreamBackend(int read_fd, int write_fd, pid_t child, std::string locator);

  wire::Response RoundTrip(const std::string& capability, const nlohmann::json& payload);
  void ReaderLoop();
  void FailPending(const std::string& reason);

  int read_fd_;
  int write_fd_;
  pid_t child_;
  std::string locator_;
  std::chrono::milliseconds timeout_{std::chrono::seconds(120)};

  std::mutex write_mu_;
  std::mutex pending_mu_;
  std::map<std::uint64_t, std::promise<wire::Response>> pending_;
  bool closed_ = false;
  std::string close_reason_;
  std::atomic<std::uint64_t> next_id_{1};
  std::thread reader_;
  Handshake handshake_;
};

// Backend reached via HTTP POST /invoke (unframed JSON bodies).
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(std::string base_url,
                       std::chrono::milliseconds timeout = std::chrono::seconds(120));

  const Handshake& handshake() const override { return handshake_; }
  nlohmann::json Invoke(Capability capability, const nlohmann::json& payload) override;

 private:
  wire::Response RoundTrip(const std::string& capability, const nlohmann::json& payload);

  std::string base_url_;
  std::chrono::milliseconds timeout_;
  std::atomic<std::uint64_t> next_id_{1};
  Handshake handshake_;
};

// Serves framed requests read from in_fd, writing responses to out_fd, until
// EOF. Malformed frames get a protocol error response and the loop goes on.
void ServeStream(Backend& backend, int in_fd, int out_fd);

// HTTP server for one backend. Port 0 picks a free port.
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<Backend> backend);
  ~HttpServer();

  // Binds and starts serving on a background thread; returns the port.
  int Start(const std::string& host, int port);
  // Binds and serves on the calling thread until Stop().
  void Run(const std::string& host, int port);
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Accepts connections on a unix socket and serves each on its own thread.
// Blocks until the listening socket fails.
void ServeUnix(Backend& backend, const std::string& socket_path);

}  // namespace storyline
