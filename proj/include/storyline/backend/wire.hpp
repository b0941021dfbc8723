#pragma once

// Backend wire protocol.
//
// Every message is one frame: the JSON byte length in ASCII decimal, a single
// '\n', then exactly that many bytes of compact JSON with sorted keys.
//
//   request  {"capability": str, "payload": obj, "request_id": uint}
//   response {"ok": true,  "payload": obj, "request_id": uint}
//            {"error": {"code": str, "message": str}, "ok": false, "request_id": uint}
//
// The pseudo-capability "handshake" (empty payload) answers with the backend's
// Handshake. Over HTTP the same JSON bodies travel unframed via POST /invoke.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "storyline/backend/capability.hpp"
#include "storyline/model/mask.hpp"
#include "storyline/model/types.hpp"

namespace storyline::wire {

inline constexpr std::string_view kHandshake = "handshake";

struct WireError {
  std::string code;
  std::string message;
};

struct Request {
  std::string capability;
  std::uint64_t request_id = 0;
  nlohmann::json payload = nlohmann::json::object();
};

struct Response {
  std::uint64_t request_id = 0;
  bool ok = true;
  nlohmann::json payload = nlohmann::json::object();
  std::optional<WireError> error;

  static Response Ok(std::uint64_t id, nlohmann::json payload);
  static Response Fail(std::uint64_t id, std::string code, std::string message);
};

// Error codes on the wire.
inline constexpr std::string_view kFixtureMiss = "fixture_miss";
inline constexpr std::string_view kUnsupported = "unsupported";
inline constexpr std::string_view kPrecondition = "precondition";
inline constexpr std::string_view kInvalidOutput = "invalid_output";
inline constexpr std::string_view kProtocol = "protocol";
inline constexpr std::string_view kInternal = "internal";

struct Handshake {
  std::string backend_id;
  std::string version;
  std::vector<Capability> capabilities;
  int embedding_dim = 0;
  std::string space_id;
  int max_in_flight = 1;

  bool Supports(Capability c) const;
};

nlohmann::json ToJson(const Request& r);
nlohmann::json ToJson(const Response& r);
nlohmann::json ToJson(const Handshake& h);
// Each throws ParseError on a malformed message.
Request RequestFromJson(const nlohmann::json& j);
Response ResponseFromJson(const nlohmann::json& j);
Handshake HandshakeFromJson(const nlohmann::json& j);

// Canonical compact dump (sorted keys).
std::string Dump(const nlohmann::json& j);
// Throws ParseError.
nlohmann::json Parse(std::string_view text);

std::string Frame(std::string_view body);
std::string EncodeRequest(const Request& r);
std::string EncodeResponse(const Response& r);

// Incremental frame splitter for byte streams.
class FrameReader {
 public:
  void Feed(std::string_view bytes) { buffer_.append(bytes); }
  // Next complete frame body, if any. Throws ParseError on a bad header.
  std::optional<std::string> Next();

 private:
  std::string buffer_;
};

// Splits a whole buffer of frames. Throws ParseError on trailing garbage.
std::vector<std::string> SplitFrames(std::string_view bytes);

// Blocking fd helpers. ReadFrame returns false on clean EOF before a frame
// starts; throws TransportError on I/O failure or truncation.
bool ReadFrame(int fd, std::string& body);
void WriteAll(int fd, std::string_view bytes);

// Payload field codecs shared by clients and servers.
nlohmann::json ImageRefJson(const ImageRef& ref, bool inline_bytes = false);
ImageRef ImageRefFromJson(const nlohmann::json& j);
nlohmann::json BoxJson(const PixelBox& box);
PixelBox BoxFromJson(const nlohmann::json& j);
nlohmann::json RleJson(const Rle& rle);
Rle RleFromJson(const nlohmann::json& j);

// Fixture lookup keys.
std::string RegionKey(std::string_view digest, const PixelBox& box);
std::string SequenceKey(std::span<const ImageRef> images);
std::string RefineKey(std::span<const std::string> raw_captions);
std::string MaskDigest(const Rle& rle);
// Digest over the context with images reduced to their digests.
std::string ContextDigest(const nlohmann::json& context);

}  // namespace storyline::wire
