#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "storyline/backend/capability.hpp"
#include "storyline/backend/wire.hpp"

namespace storyline {

using wire::Handshake;

// A perception/LLM adapter. Invoke takes and returns wire payloads; contract
// validation of outputs is the client's job (see PerceptionClient).
// Implementations must accept concurrent Invoke calls.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const Handshake& handshake() const = 0;

  // Throws the library error matching the failure (FixtureMissError,
  // CapabilityError, PreconditionError, TransportError, ...).
  virtual nlohmann::json Invoke(Capability capability, const nlohmann::json& payload) = 0;
};

// Server side: runs one request against a backend, mapping thrown errors to
// wire error codes. Never throws.
wire::Response Dispatch(Backend& backend, const wire::Request& request);

// Client side: rethrows a wire error as the matching library error.
[[noreturn]] void ThrowWireError(const wire::WireError& error);

// Decorator that records every call. Used for protocol transcripts.
class RecordingBackend : public Backend {
 public:
  struct Call {
    Capability capability;
    nlohmann::json payload;
  };

  explicit RecordingBackend(std::shared_ptr<Backend> inner) : inner_(std::move(inner)) {}

  const Handshake& handshake() const override { return inner_->handshake(); }
  nlohmann::json Invoke(Capability capability, const nlohmann::json& payload) override;

  std::vector<Call> calls() const;
  void Clear();

 private:
  std::shared_ptr<Backend> inner_;
  mutable std::mutex mu_;
  std::vector<Call> calls_;
};

}  // namespace storyline
