#include "storyline/backend/wire.hpp"

#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>

#include "storyline/common/digest.hpp"
#include "storyline/common/errors.hpp"

namespace storyline::wire {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxFrameBytes = 256u << 20;

const json& Field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(std::string("wire: missing field '") + key + "'");
  }
  return j.at(key);
}

std::uint64_t ParseLength(std::string_view header) {
  if (header.empty() || header.size() > 12) throw ParseError("wire: bad frame header");
  std::uint64_t n = 0;
  auto [ptr, ec] = std::from_chars(header.data(), header.data() + header.size(), n);
  if (ec != std::errc() || ptr != header.data() + header.size()) {
    throw ParseError("wire: bad frame header '" + std::string(header) + "'");
  }
  if (n > kMaxFrameBytes) throw ParseError("wire: frame too large");
  return n;
}

}  // namespace

Response Response::Ok(std::uint64_t id, json payload) {
  Response r;
  r.request_id = id;
  r.ok = true;
  r.payload = std::move(payload);
  return r;
}

Response Response::Fail(std::uint64_t id, std::string code, std::string message) {
  Response r;
  r.request_id = id;
  r.ok = false;
  r.payload = json::object();
  r.error = WireError{std::move(code), std::move(message)};
  return r;
}

bool Handshake::Supports(Capability c) const {
  return std::find(capabilities.begin(), capabilities.end(), c) != capabilities.end();
}

json ToJson(const Request& r) {
  return json{{"capability", r.capability}, {"request_id", r.request_id}, {"payload", r.payload}};
}

json ToJson(const Response& r) {
  if (r.ok) return json{{"request_id", r.request_id}, {"ok", true}, {"payload", r.payload}};
  const WireError e = r.error.value_or(WireError{std::string(kInternal), "unknown error"});
  return json{{"request_id", r.request_id},
              {"ok", false},
              {"error", json{{"code", e.code}, {"message", e.message}}}};
}

json ToJson(const Handshake& h) {
  json caps = json::array();
  for (Capability c : h.capabilities) caps.push_back(std::string(ToString(c)));
  return json{{"backend_id", h.backend_id},   {"version", h.version},
              {"capabilities", caps},         {"embedding_dim", h.embedding_dim},
              {"space_id", h.space_id},       {"max_in_flight", h.max_in_flight}};
}

Request RequestFromJson(const json& j) {
  try {
    Request r;
    r.capability = Field(j, "capability").get<std::string>();
    r.request_id = Field(j, "request_id").get<std::uint64_t>();
    r.payload = j.contains("payload") ? j.at("payload") : json::object();
    if (!r.payload.is_object()) throw ParseError("wire: payload must be an object");
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("wire: bad request: ") + e.what());
  }
}

Response ResponseFromJson(const json& j) {
  try {
    Response r;
    r.request_id = Field(j, "request_id").get<std::uint64_t>();
    r.ok = Field(j, "ok").get<bool>();
    if (r.ok) {
      r.payload = Field(j, "payload");
    } else {
      const auto& e = Field(j, "error");
      r.error = WireError{Field(e, "code").get<std::string>(), Field(e, "message").get<std::string>()};
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("wire: bad response: ") + e.what());
  }
}

Handshake HandshakeFromJson(const json& j) {
  try {
    Handshake h;
    h.backend_id = Field(j, "backend_id").get<std::string>();
    h.version = Field(j, "version").get<std::string>();
    for (const auto& c : Field(j, "capabilities")) {
      auto cap = ParseCapability(c.get<std::string>());
      if (!cap) throw ParseError("wire: unknown capability '" + c.get<std::string>() + "'");
      h.capabilities.push_back(*cap);
    }
    h.embedding_dim = Field(j, "embedding_dim").get<int>();
    h.space_id = Field(j, "space_id").get<std::string>();
    h.max_in_flight = Field(j, "max_in_flight").get<int>();
    if (h.max_in_flight < 1) throw ParseError("wire: max_in_flight must be >= 1");
    return h;
  } catch (const json::exception& e) {
    throw ParseError(std::string("wire: bad handshake: ") + e.what());
  }
}

std::string Dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::strict); }

json Parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("wire: malformed JSON: ") + e.what());
  }
}

std::string Frame(std::string_view body) {
  std::string out = std::to_string(body.size());
  out.push_back('\n');
  out.append(body);
  return out;
}

std::string EncodeRequest(const Request& r) { return Frame(Dump(ToJson(r))); }
std::string EncodeResponse(const Response& r) { return Frame(Dump(ToJson(r))); }

std::optional<std::string> FrameReader::Next() {
  const auto nl = buffer_.find('\n');
  if (nl == std::string::npos) {
    if (buffer_.size() > 12) throw ParseError("wire: bad frame header");
    return std::nullopt;
  }
  const auto n = ParseLength(std::string_view(buffer_).substr(0, nl));
  if (buffer_.size() < nl + 1 + n) return std::nullopt;
  std::string body = buffer_.substr(nl + 1, n);
  buffer_.erase(0, nl + 1 + n);
  return body;
}

std::vector<std::string> SplitFrames(std::string_view bytes) {
  FrameReader reader;
  reader.Feed(bytes);
  std::vector<std::string> out;
  std::size_t consumed = 0;
  while (auto body = reader.Next()) {
    consumed += std::to_string(body->size()).size() + 1 + body->size();
    out.push_back(std::move(*body));
  }
  if (consumed != bytes.size()) throw ParseError("wire: trailing bytes after last frame");
  return out;
}

namespace {

// Returns bytes read; 0 on EOF.
std::size_t ReadSome(int fd, char* buf, std::size_t n) {
  for (;;) {
    const ssize_t r = ::read(fd, buf, n);
    if (r >= 0) return static_cast<std::size_t>(r);
    if (errno == EINTR) continue;
    throw TransportError(std::string("read failed: ") + std::strerror(errno));
  }
}

}  // namespace

bool ReadFrame(int fd, std::string& body) {
  std::string header;
  char c = 0;
  for (;;) {
    if (ReadSome(fd, &c, 1) == 0) {
      if (header.empty()) return false;
      throw TransportError("stream closed inside a frame header");
    }
    if (c == '\n') break;
    header.push_back(c);
    if (header.size() > 12) throw ParseError("wire: bad frame header");
  }
  const auto n = ParseLength(header);
  body.assign(n, '\0');
  std::size_t got = 0;
  while (got < n) {
    const auto r = ReadSome(fd, body.data() + got, n - got);
    if (r == 0) throw TransportError("stream closed inside a frame body");
    got += r;
  }
  return true;
}

void WriteAll(int fd, std::string_view bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t w = ::write(fd, bytes.data() + sent, bytes.size() - sent);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("write failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(w);
  }
}

json ImageRefJson(const ImageRef& ref, bool inline_bytes) {
  json j{{"digest", ref.digest}};
  if (inline_bytes && !ref.path.empty()) {
    j["data_b64"] = Base64Encode(ReadFileBytes(ref.path));
  } else {
    j["path"] = ref.path;
  }
  return j;
}

ImageRef ImageRefFromJson(const json& j) {
  try {
    ImageRef ref;
    ref.digest = Field(j, "digest").get<std::string>();
    if (j.contains("path")) ref.path = j.at("path").get<std::string>();
    if (ref.digest.empty()) throw ParseError("wire: image digest is empty");
    return ref;
  } catch (const json::exception& e) {
    throw ParseError(std::string("wire: bad image ref: ") + e.what());
  }
}

json BoxJson(const PixelBox& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

PixelBox BoxFromJson(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("wire: bbox must have 4 entries");
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ParseError("wire: bbox entries must be integers");
  }
  return PixelBox{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

json RleJson(const Rle& rle) {
  return json{{"counts", rle.counts}, {"size", json::array({rle.height, rle.width})}};
}

Rle RleFromJson(const json& j) {
  try {
    const auto& size = Field(j, "size");
    if (!size.is_array() || size.size() != 2) throw ParseError("wire: mask size must be [h, w]");
    return Rle{size[0].get<int>(), size[1].get<int>(),
               Field(j, "counts").get<std::vector<std::uint32_t>>()};
  } catch (const json::exception& e) {
    throw ParseError(std::string("wire: bad mask: ") + e.what());
  }
}

std::string RegionKey(std::string_view digest, const PixelBox& b) {
  return std::string(digest) + "@" + std::to_string(b.x_min) + "," + std::to_string(b.y_min) + "," +
         std::to_string(b.x_max) + "," + std::to_string(b.y_max);
}

std::string SequenceKey(std::span<const ImageRef> images) {
  std::string key;
  for (const auto& img : images) {
    if (!key.empty()) key.push_back(',');
    key += img.digest;
  }
  return key;
}

std::string RefineKey(std::span<const std::string> raw_captions) {
  std::string key;
  for (std::size_t i = 0; i < raw_captions.size(); ++i) {
    if (i > 0) key.push_back('\n');
    key += raw_captions[i];
  }
  return key;
}

std::string MaskDigest(const Rle& rle) { return Sha256Digest(Dump(RleJson(rle))); }

std::string ContextDigest(const json& context) {
  json reduced = json::array();
  for (const auto& part : context) {
    if (part.contains("image")) {
      reduced.push_back(json{{"image", Field(part.at("image"), "digest")}});
    } else {
      reduced.push_back(part);
    }
  }
  return Sha256Digest(Dump(reduced));
}

}  // namespace storyline::wire
