#include "storyline/backend/transport.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <vector>

#include <httplib.h>

#include "storyline/common/errors.hpp"
#include "storyline/common/log.hpp"

namespace storyline {

using nlohmann::json;

namespace {

void IgnoreSigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

json PayloadOrThrow(const wire::Response& response) {
  if (!response.ok) ThrowWireError(response.error.value_or(wire::WireError{"internal", "unknown"}));
  return response.payload;
}

}  // namespace

StreamBackend::StreamBackend(int read_fd, int write_fd, pid_t child, std::string locator)
    : read_fd_(read_fd), write_fd_(write_fd), child_(child), locator_(std::move(locator)) {
  reader_ = std::thread([this] { ReaderLoop(); });
  try {
    handshake_ = wire::HandshakeFromJson(PayloadOrThrow(RoundTrip(std::string(wire::kHandshake), json::object())));
  } catch (...) {
    ::shutdown(read_fd_, SHUT_RDWR);
    if (write_fd_ != read_fd_) ::close(write_fd_);
    write_fd_ = -1;
    if (child_ > 0) ::kill(child_, SIGTERM);
    reader_.join();
    ::close(read_fd_);
    if (child_ > 0) ::waitpid(child_, nullptr, 0);
    throw;
  }
}

std::shared_ptr<StreamBackend> StreamBackend::Spawn(const std::string& command) {
  IgnoreSigpipe();
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0) {
    throw TransportError(std::string("pipe failed: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw TransportError(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::shared_ptr<StreamBackend>(
      new StreamBackend(from_child[0], to_child[1], pid, "subprocess:" + command));
}

std::shared_ptr<StreamBackend> StreamBackend::ConnectUnix(const std::string& socket_path) {
  IgnoreSigpipe();
  const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw TransportError(std::string("socket failed: ") + std::strerror(errno));
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (socket_path.size() >= sizeof(addr.sun_path)) {
    ::close(fd);
    throw TransportError("unix socket path too long: " + socket_path);
  }
  std::strncpy(addr.sun_path, socket_path.c_str(), sizeof(addr.sun_path) - 1);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw TransportError("connect " + socket_path + ": " + err);
  }
  return std::shared_ptr<StreamBackend>(new StreamBackend(fd, fd, -1, "unix:" + socket_path));
}

StreamBackend::~StreamBackend() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (read_fd_ == write_fd_) ::shutdown(read_fd_, SHUT_RDWR);
  if (reader_.joinable()) reader_.join();
  ::close(read_fd_);
  if (child_ > 0) {
    int status = 0;
    ::waitpid(child_, &status, 0);
  }
}

void StreamBackend::ReaderLoop() {
  std::string body;
  try {
    while (wire::ReadFrame(read_fd_, body)) {
      const auto response = wire::ResponseFromJson(wire::Parse(body));
      std::lock_guard lock(pending_mu_);
      auto it = pending_.find(response.request_id);
      if (it == pending_.end()) {
        log::Warn(locator_ + ": response for unknown request_id " + std::to_string(response.request_id));
        continue;
      }
      it->second.set_value(response);
      pending_.erase(it);
    }
    FailPending("backend closed the stream");
  } catch (const std::exception& e) {
    FailPending(e.what());
  }
}

void StreamBackend::FailPending(const std::string& reason) {
  std::lock_guard lock(pending_mu_);
  closed_ = true;
  close_reason_ = reason;
  for (auto& [id, promise] : pending_) {
    promise.set_exception(std::make_exception_ptr(TransportError(locator_ + ": " + reason)));
  }
  pending_.clear();
}

wire::Response StreamBackend::RoundTrip(const std::string& capability, const json& payload) {
  const std::uint64_t id = next_id_.fetch_add(1);
  std::future<wire::Response> fut;
  {
    std::lock_guard lock(pending_mu_);
    if (closed_) throw TransportError(locator_ + ": " + close_reason_);
    fut = pending_[id].get_future();
  }
  try {
    const std::string frame = wire::EncodeRequest(wire::Request{capability, id, payload});
    std::lock_guard lock(write_mu_);
    if (write_fd_ < 0) throw TransportError(locator_ + ": stream closed");
    wire::WriteAll(write_fd_, frame);
  } catch (const TransportError& e) {
    std::lock_guard lock(pending_mu_);
    pending_.erase(id);
    throw TransportError(locator_ + ": " + e.what());
  }
  if (fut.wait_for(timeout_) != std::future_status::ready) {
    std::lock_guard lock(pending_mu_);
    pending_.erase(id);
    throw TransportError(locator_ + ": timed out waiting for " + capability);
  }
  return fut.get();
}

json StreamBackend::Invoke(Capability capability, const json& payload) {
  return PayloadOrThrow(RoundTrip(std::string(ToString(capability)), payload));
}

HttpBackend::HttpBackend(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
  handshake_ = wire::HandshakeFromJson(PayloadOrThrow(RoundTrip(std::string(wire::kHandshake), json::object())));
}

wire::Response HttpBackend::RoundTrip(const std::string& capability, const json& payload) {
  const std::uint64_t id = next_id_.fetch_add(1);
  httplib::Client client(base_url_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(secs.count(), 0);
  client.set_write_timeout(secs.count(), 0);
  const std::string body = wire::Dump(wire::ToJson(wire::Request{capability, id, payload}));
  auto res = client.Post("/invoke", body, "application/json");
  if (!res) {
    throw TransportError(base_url_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransportError(base_url_ + ": HTTP " + std::to_string(res->status) + " " + res->body);
  }
  auto response = wire::ResponseFromJson(wire::Parse(res->body));
  if (response.request_id != id) throw TransportError(base_url_ + ": request_id mismatch");
  return response;
}

json HttpBackend::Invoke(Capability capability, const json& payload) {
  return PayloadOrThrow(RoundTrip(std::string(ToString(capability)), payload));
}

void ServeStream(Backend& backend, int in_fd, int out_fd) {
  std::string body;
  for (;;) {
    wire::Response response;
    try {
      if (!wire::ReadFrame(in_fd, body)) return;
      response = Dispatch(backend, wire::RequestFromJson(wire::Parse(body)));
    } catch (const ParseError& e) {
      response = wire::Response::Fail(0, std::string(wire::kProtocol), e.what());
    } catch (const TransportError&) {
      return;
    }
    try {
      wire::WriteAll(out_fd, wire::EncodeResponse(response));
    } catch (const TransportError&) {
      return;
    }
  }
}

struct HttpServer::Impl {
  std::shared_ptr<Backend> backend;
  httplib::Server server;
  std::thread thread;
};

HttpServer::HttpServer(std::shared_ptr<Backend> backend) : impl_(std::make_unique<Impl>()) {
  impl_->backend = std::move(backend);
  impl_->server.Post("/invoke", [this](const httplib::Request& req, httplib::Response& res) {
    wire::Response response;
    try {
      response = Dispatch(*impl_->backend, wire::RequestFromJson(wire::Parse(req.body)));
    } catch (const ParseError& e) {
      response = wire::Response::Fail(0, std::string(wire::kProtocol), e.what());
    }
    res.set_content(wire::Dump(wire::ToJson(response)), "application/json");
  });
}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw TransportError("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::Run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw TransportError("cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpServer::Stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void ServeUnix(Backend& backend, const std::string& socket_path) {
  IgnoreSigpipe();
  const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw TransportError(std::string("socket failed: ") + std::strerror(errno));
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  std::strncpy(addr.sun_path, socket_path.c_str(), sizeof(addr.sun_path) - 1);
  ::unlink(socket_path.c_str());
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd, 16) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw TransportError("cannot listen on " + socket_path + ": " + err);
  }
  std::vector<std::thread> workers;
  for (;;) {
    const int conn = ::accept4(fd, nullptr, nullptr, SOCK_CLOEXEC);
    if (conn < 0) {
      if (errno == EINTR) continue;
      break;
    }
    workers.emplace_back([&backend, conn] {
      ServeStream(backend, conn, conn);
      ::close(conn);
    });
  }
  ::close(fd);
  for (auto& w : workers) w.join();
}

}  // namespace storyline
