#include "storyline/backend/backend.hpp"

#include "storyline/common/errors.hpp"

namespace storyline {

wire::Response Dispatch(Backend& backend, const wire::Request& request) {
  const auto id = request.request_id;
  if (request.capability == wire::kHandshake) {
    return wire::Response::Ok(id, wire::ToJson(backend.handshake()));
  }
  const auto cap = ParseCapability(request.capability);
  if (!cap || !backend.handshake().Supports(*cap)) {
    return wire::Response::Fail(id, std::string(wire::kUnsupported),
                                "capability not served: " + request.capability);
  }
  try {
    return wire::Response::Ok(id, backend.Invoke(*cap, request.payload));
  } catch (const FixtureMissError& e) {
    return wire::Response::Fail(id, std::string(wire::kFixtureMiss), e.what());
  } catch (const CapabilityError& e) {
    return wire::Response::Fail(id, std::string(wire::kUnsupported), e.what());
  } catch (const PreconditionError& e) {
    return wire::Response::Fail(id, std::string(wire::kPrecondition), e.what());
  } catch (const InvalidOutputError& e) {
    return wire::Response::Fail(id, std::string(wire::kInvalidOutput), e.what());
  } catch (const ParseError& e) {
    return wire::Response::Fail(id, std::string(wire::kProtocol), e.what());
  } catch (const std::exception& e) {
    return wire::Response::Fail(id, std::string(wire::kInternal), e.what());
  }
}

void ThrowWireError(const wire::WireError& error) {
  const std::string msg = error.message;
  if (error.code == wire::kFixtureMiss) throw FixtureMissError(msg);
  if (error.code == wire::kUnsupported) throw CapabilityError(msg);
  if (error.code == wire::kPrecondition) throw PreconditionError(msg);
  if (error.code == wire::kInvalidOutput) throw InvalidOutputError(msg);
  if (error.code == wire::kProtocol) throw ParseError(msg);
  throw RemoteError(error.code + ": " + msg);
}

nlohmann::json RecordingBackend::Invoke(Capability capability, const nlohmann::json& payload) {
  {
    std::lock_guard lock(mu_);
    calls_.push_back(Call{capability, payload});
  }
  return inner_->Invoke(capability, payload);
}

std::vector<RecordingBackend::Call> RecordingBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

void RecordingBackend::Clear() {
  std::lock_guard lock(mu_);
  calls_.clear();
}

}  // namespace storyline
