#include "storyline/backend/mock_backend.hpp"

#include <algorithm>

#include "storyline/common/digest.hpp"
#include "storyline/common/errors.hpp"

namespace storyline {

using nlohmann::json;

namespace {

const json& Require(const json& payload, const char* key) {
  if (!payload.is_object() || !payload.contains(key)) {
    throw PreconditionError(std::string("payload missing '") + key + "'");
  }
  return payload.at(key);
}

std::string ImageDigest(const json& payload) {
  return wire::ImageRefFromJson(Require(payload, "image")).digest;
}

std::string RegionKeyOf(const json& payload) {
  return wire::RegionKey(ImageDigest(payload), wire::BoxFromJson(Require(payload, "bbox")));
}

bool IsEcho(const json& table) { return table.is_string() && table.get<std::string>() == "echo"; }

}  // namespace

MockBackend::MockBackend(json fixture) : fixture_(std::move(fixture)) {
  if (!fixture_.is_object()) throw ConfigError("mock fixture must be a JSON object");
  handshake_.backend_id = fixture_.value("backend_id", std::string("mock"));
  handshake_.version = fixture_.value("version", std::string("1"));
  handshake_.space_id = fixture_.value("space_id", std::string("mock-space"));
  handshake_.embedding_dim = fixture_.value("embedding_dim", 0);
  handshake_.max_in_flight = fixture_.value("max_in_flight", 8);
  filter_labels_ = fixture_.value("detect_filter_labels", true);
  if (handshake_.max_in_flight < 1) throw ConfigError("mock fixture: max_in_flight must be >= 1");
  if (fixture_.contains("capabilities")) {
    for (const auto& c : fixture_.at("capabilities")) {
      auto cap = ParseCapability(c.get<std::string>());
      if (!cap) throw ConfigError("mock fixture: unknown capability " + c.dump());
      handshake_.capabilities.push_back(*cap);
    }
  } else {
    for (Capability c : kAllCapabilities) {
      if (fixture_.contains(std::string(ToString(c)))) handshake_.capabilities.push_back(c);
    }
  }
}

std::shared_ptr<MockBackend> MockBackend::FromFile(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ConfigError("mock fixture " + path.string() + ": " + e.what());
  }
  return std::make_shared<MockBackend>(std::move(j));
}

const json& MockBackend::Lookup(Capability capability, const std::string& key) const {
  const std::string name(ToString(capability));
  auto table = fixture_.find(name);
  if (table == fixture_.end() || !table->is_object()) {
    throw FixtureMissError(name + ": no fixture table");
  }
  auto it = table->find(key);
  if (it == table->end()) throw FixtureMissError(name + ": no fixture entry for '" + key + "'");
  return *it;
}

json MockBackend::Invoke(Capability capability, const json& payload) {
  if (!handshake_.Supports(capability)) {
    throw CapabilityError("mock backend does not serve " + std::string(ToString(capability)));
  }
  switch (capability) {
    case Capability::kEmbedImage: {
      const std::string key = payload.contains("bbox") && !payload.at("bbox").is_null()
                                  ? RegionKeyOf(payload)
                                  : ImageDigest(payload);
      return json{{"embedding", Lookup(capability, key)}, {"space_id", handshake_.space_id}};
    }
    case Capability::kEmbedText:
      return json{{"embedding", Lookup(capability, Require(payload, "text").get<std::string>())},
                  {"space_id", handshake_.space_id}};
    case Capability::kCaptionImage:
      return json{{"caption", Lookup(capability, ImageDigest(payload))}};
    case Capability::kCaptionSequence: {
      std::vector<ImageRef> images;
      for (const auto& img : Require(payload, "images")) images.push_back(wire::ImageRefFromJson(img));
      if (images.size() < 2) throw PreconditionError("caption_sequence needs at least 2 frames");
      return json{{"caption", Lookup(capability, wire::SequenceKey(images))}};
    }
    case Capability::kRefineCaptions: {
      const auto raw = Require(payload, "raw_captions").get<std::vector<std::string>>();
      if (IsEcho(fixture_.at("refine_captions"))) return json{{"captions", raw}};
      return json{{"captions", Lookup(capability, wire::RefineKey(raw))}};
    }
    case Capability::kDetect: {
      const auto labels = Require(payload, "labels").get<std::vector<std::string>>();
      json entry = Lookup(capability, ImageDigest(payload));
      if (filter_labels_ && entry.contains("detections")) {
        json kept = json::array();
        for (const auto& d : entry.at("detections")) {
          const auto label = d.value("label", std::string());
          if (std::find(labels.begin(), labels.end(), label) != labels.end()) kept.push_back(d);
        }
        entry["detections"] = std::move(kept);
      }
      return entry;
    }
    case Capability::kSegment:
      return json{{"mask", Lookup(capability, RegionKeyOf(payload))}};
    case Capability::kFaceEmbedding:
      return json{{"embedding", Lookup(capability, RegionKeyOf(payload))},
                  {"space_id", handshake_.space_id}};
    case Capability::kAestheticScore:
      return json{{"score", Lookup(capability, ImageDigest(payload))}};
    case Capability::kInpaint: {
      const auto mask = wire::RleFromJson(Require(payload, "mask"));
      return json{{"image", Lookup(capability, ImageDigest(payload) + "#" + wire::MaskDigest(mask))}};
    }
    case Capability::kGenerateImage: {
      const auto& context = Require(payload, "context");
      if (!context.is_array() || context.empty()) throw PreconditionError("generate_image: empty context");
      if (IsEcho(fixture_.at("generate_image"))) {
        for (auto it = context.rbegin(); it != context.rend(); ++it) {
          if (it->contains("image")) return json{{"image", it->at("image")}};
        }
        throw FixtureMissError("generate_image echo: context has no image");
      }
      return json{{"image", Lookup(capability, wire::ContextDigest(context))}};
    }
  }
  throw CapabilityError("unknown capability");
}

}  // namespace storyline
