#include "storyline/backend/client.hpp"

#include <algorithm>
#include <cmath>

#include "storyline/backend/builtin.hpp"
#include "storyline/backend/mock_backend.hpp"
#include "storyline/backend/transport.hpp"
#include "storyline/common/errors.hpp"
#include "storyline/model/lexicon.hpp"
#include "storyline/model/mentions.hpp"

namespace storyline {

using nlohmann::json;

namespace {

std::string Where(Capability c) { return std::string(ToString(c)) + ": "; }

void ReplaceAll(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

}  // namespace

BackendDescriptor DescriptorFromJson(const json& j) {
  try {
    BackendDescriptor d;
    d.id = j.at("id").get<std::string>();
    d.endpoint = j.at("endpoint").get<std::string>();
    d.max_in_flight = j.value("max_in_flight", 0);
    if (j.contains("max_in_flight") && d.max_in_flight < 1) {
      throw ConfigError("backend " + d.id + ": max_in_flight must be >= 1");
    }
    for (const auto& c : j.value("capabilities", json::array())) {
      auto cap = ParseCapability(c.get<std::string>());
      if (!cap) throw ConfigError("backend " + d.id + ": unknown capability " + c.dump());
      d.capabilities.push_back(*cap);
    }
    return d;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad backend descriptor: ") + e.what());
  }
}

json ToJson(const BackendDescriptor& d) {
  json caps = json::array();
  for (auto c : d.capabilities) caps.push_back(std::string(ToString(c)));
  json j{{"id", d.id}, {"endpoint", d.endpoint}, {"capabilities", caps}};
  if (d.max_in_flight > 0) j["max_in_flight"] = d.max_in_flight;
  return j;
}

std::shared_ptr<Backend> OpenBackend(const BackendDescriptor& d, const std::filesystem::path& base_dir) {
  const std::string& e = d.endpoint;
  if (StartsWith(e, "mock:")) {
    std::filesystem::path p = e.substr(5);
    if (p.is_relative()) p = base_dir / p;
    return MockBackend::FromFile(p);
  }
  if (StartsWith(e, "subprocess:")) return StreamBackend::Spawn(e.substr(11));
  if (StartsWith(e, "unix:")) return StreamBackend::ConnectUnix(e.substr(5));
  if (StartsWith(e, "http://")) return std::make_shared<HttpBackend>(e);
  if (StartsWith(e, "builtin:mean-fill-inpaint")) {
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "storyline-inpaint";
    if (auto eq = e.find("?dir="); eq != std::string::npos) {
      dir = e.substr(eq + 5);
      if (dir.is_relative()) dir = base_dir / dir;
    }
    return std::make_shared<MeanFillInpainter>(dir);
  }
  if (e == "builtin:echo-generator") return std::make_shared<EchoGenerator>();
  throw ConfigError("backend " + d.id + ": unknown endpoint '" + e + "'");
}

std::string RenderRefinePrompt(std::string_view prompt_template, std::string_view sequence_caption,
                               std::span<const Caption> raw_captions) {
  if (prompt_template.find(kSequenceSlot) == std::string_view::npos ||
      prompt_template.find(kCaptionsSlot) == std::string_view::npos) {
    throw PreconditionError("refine prompt template must contain {sequence} and {captions}");
  }
  std::string numbered;
  for (std::size_t i = 0; i < raw_captions.size(); ++i) {
    numbered += std::to_string(i + 1) + ". " + raw_captions[i].text + "\n";
  }
  std::string out(prompt_template);
  ReplaceAll(out, kSequenceSlot, sequence_caption);
  ReplaceAll(out, kCaptionsSlot, numbered);
  return out;
}

void PerceptionClient::Register(std::shared_ptr<Backend> backend, std::vector<Capability> capabilities,
                                int max_in_flight) {
  const auto& hs = backend->handshake();
  if (capabilities.empty()) capabilities = hs.capabilities;
  const int slots = max_in_flight > 0 ? max_in_flight : std::max(1, hs.max_in_flight);
  auto sem = std::make_shared<std::counting_semaphore<>>(slots);
  for (Capability c : capabilities) {
    if (!hs.Supports(c)) {
      throw ConfigError("backend " + hs.backend_id + " does not declare capability " +
                        std::string(ToString(c)));
    }
    if (routes_.contains(c)) {
      throw ConfigError("capability " + std::string(ToString(c)) + " is routed twice");
    }
    routes_[c] = Route{backend, sem};
  }
}

std::string PerceptionClient::BackendId(Capability c) const {
  auto it = routes_.find(c);
  if (it == routes_.end()) return {};
  const auto& hs = it->second.backend->handshake();
  return hs.backend_id + "@" + hs.version;
}

std::map<std::string, std::string> PerceptionClient::BackendIds() const {
  std::map<std::string, std::string> out;
  for (const auto& [c, r] : routes_) out[std::string(ToString(c))] = BackendId(c);
  return out;
}

std::optional<std::string> PerceptionClient::SpaceId(Capability c) const {
  auto it = routes_.find(c);
  if (it == routes_.end()) return std::nullopt;
  return it->second.backend->handshake().space_id;
}

void PerceptionClient::Require(std::span<const Capability> capabilities) const {
  for (Capability c : capabilities) {
    if (!Has(c)) throw CapabilityError("missing backend capability: " + std::string(ToString(c)));
  }
}

json PerceptionClient::Call(Capability c, const json& payload) {
  auto it = routes_.find(c);
  if (it == routes_.end()) {
    throw CapabilityError("no backend serves " + std::string(ToString(c)));
  }
  auto& route = it->second;
  route.slots->acquire();
  struct Release {
    std::counting_semaphore<>* s;
    ~Release() { s->release(); }
  } release{route.slots.get()};
  return route.backend->Invoke(c, payload);
}

EmbeddingVector PerceptionClient::ToEmbedding(Capability c, const json& values) {
  std::vector<double> v;
  try {
    v = values.get<std::vector<double>>();
  } catch (const json::exception&) {
    throw InvalidOutputError(Where(c) + "embedding is not a numeric array");
  }
  if (v.empty()) throw InvalidOutputError(Where(c) + "empty embedding");
  const auto& hs = routes_.at(c).backend->handshake();
  if (hs.embedding_dim > 0 && v.size() != static_cast<std::size_t>(hs.embedding_dim)) {
    throw InvalidOutputError(Where(c) + "dim " + std::to_string(v.size()) + " differs from declared " +
                             std::to_string(hs.embedding_dim));
  }
  {
    std::lock_guard lock(dims_mu_);
    auto [it, inserted] = dims_.emplace(c, v.size());
    if (!inserted && it->second != v.size()) {
      throw InvalidOutputError(Where(c) + "dim " + std::to_string(v.size()) +
                               " differs from earlier calls (" + std::to_string(it->second) + ")");
    }
  }
  try {
    return EmbeddingVector::Normalized(std::move(v), hs.space_id);
  } catch (const std::invalid_argument& e) {
    throw InvalidOutputError(Where(c) + e.what());
  }
}

EmbeddingVector PerceptionClient::EmbedImage(const ImageRef& image, std::optional<PixelBox> region) {
  json payload{{"image", wire::ImageRefJson(image)}};
  if (region) {
    if (region->Degenerate()) throw PreconditionError("embed_image: degenerate region");
    payload["bbox"] = wire::BoxJson(*region);
  }
  const json out = Call(Capability::kEmbedImage, payload);
  if (!out.contains("embedding")) throw InvalidOutputError("embed_image: no embedding");
  return ToEmbedding(Capability::kEmbedImage, out.at("embedding"));
}

EmbeddingVector PerceptionClient::EmbedText(std::string_view text) {
  const json out = Call(Capability::kEmbedText, json{{"text", std::string(text)}});
  if (!out.contains("embedding")) throw InvalidOutputError("embed_text: no embedding");
  return ToEmbedding(Capability::kEmbedText, out.at("embedding"));
}

Caption PerceptionClient::CaptionImage(const ImageRef& image) {
  const json out = Call(Capability::kCaptionImage, json{{"image", wire::ImageRefJson(image)}});
  const auto text = out.value("caption", json()).is_string() ? out.at("caption").get<std::string>() : std::string();
  if (text.empty()) throw InvalidOutputError("caption_image: empty caption");
  return Caption{text, CaptionKind::kRaw, {}};
}

Caption PerceptionClient::CaptionSequence(std::span<const ImageRef> frames) {
  if (frames.size() < 2) throw PreconditionError("caption_sequence needs at least 2 frames");
  json images = json::array();
  for (const auto& f : frames) images.push_back(wire::ImageRefJson(f));
  const json out = Call(Capability::kCaptionSequence, json{{"images", images}});
  const auto text = out.value("caption", json()).is_string() ? out.at("caption").get<std::string>() : std::string();
  if (text.empty()) throw InvalidOutputError("caption_sequence: empty caption");
  return Caption{text, CaptionKind::kSequence, {}};
}

RefineResult PerceptionClient::RefineCaptions(const Caption& sequence_caption,
                                              std::span<const Caption> raw_captions,
                                              std::string_view prompt_template) {
  if (raw_captions.empty()) throw PreconditionError("refine_captions needs at least one caption");
  const std::string prompt = RenderRefinePrompt(prompt_template, sequence_caption.text, raw_captions);
  json raw = json::array();
  for (const auto& c : raw_captions) raw.push_back(c.text);
  const json out = Call(Capability::kRefineCaptions,
                        json{{"sequence_caption", sequence_caption.text}, {"raw_captions", raw}, {"prompt", prompt}});
  std::vector<std::string> texts;
  try {
    texts = out.at("captions").get<std::vector<std::string>>();
  } catch (const json::exception&) {
    throw InvalidOutputError("refine_captions: 'captions' must be a list of strings");
  }
  if (texts.size() != raw_captions.size()) {
    throw InvalidOutputError("refine_captions: got " + std::to_string(texts.size()) + " captions for " +
                             std::to_string(raw_captions.size()) + " inputs");
  }
  RefineResult result;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Caption c{texts[i], CaptionKind::kRefined, {}};
    std::vector<std::string> warnings;
    for (auto& m : FindNounMentions(c.text)) {
      if (m.identity_index) {
        c.entity_mentions.push_back(std::move(m));
      } else if (lexicon::IsSubjectLabel(m.label)) {
        warnings.push_back("unindexed subject '" + m.surface + "'");
      }
    }
    if (c.entity_mentions.empty()) warnings.push_back("refined caption has no identity-indexed mention");
    result.captions.push_back(std::move(c));
    result.warnings.push_back(std::move(warnings));
  }
  return result;
}

DetectionResult PerceptionClient::Detect(const ImageRef& image, std::span<const std::string> labels) {
  if (labels.empty()) throw PreconditionError("detect: labels must be non-empty");
  json label_list(std::vector<std::string>(labels.begin(), labels.end()));
  const json out = Call(Capability::kDetect, json{{"image", wire::ImageRefJson(image)}, {"labels", label_list}});
  DetectionResult result;
  try {
    const auto size = out.at("image_size").get<std::vector<int>>();
    if (size.size() != 2 || size[0] <= 0 || size[1] <= 0) throw InvalidOutputError("detect: bad image_size");
    result.image_size = ImageSize{size[0], size[1]};
    for (const auto& d : out.at("detections")) {
      Detection det{d.at("label").get<std::string>(), wire::BoxFromJson(d.at("bbox")),
                    d.at("confidence").get<double>()};
      if (std::find(labels.begin(), labels.end(), det.label) == labels.end()) {
        throw InvalidOutputError("detect: label '" + det.label + "' was not requested");
      }
      if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
        throw InvalidOutputError("detect: confidence outside [0, 1]");
      }
      if (det.bbox.Degenerate() || !det.bbox.Within(result.image_size.width, result.image_size.height)) {
        throw InvalidOutputError("detect: bbox degenerate or outside the image");
      }
      result.detections.push_back(std::move(det));
    }
  } catch (const json::exception& e) {
    throw InvalidOutputError(std::string("detect: malformed output: ") + e.what());
  } catch (const ParseError& e) {
    throw InvalidOutputError(std::string("detect: malformed output: ") + e.what());
  }
  std::stable_sort(result.detections.begin(), result.detections.end(), DetectionOrder);
  return result;
}

InstanceMask PerceptionClient::Segment(const ImageRef& image, const PixelBox& box) {
  if (box.Degenerate()) throw PreconditionError("segment: degenerate bbox");
  const json out = Call(Capability::kSegment,
                        json{{"image", wire::ImageRefJson(image)}, {"bbox", wire::BoxJson(box)}});
  Rle rle;
  try {
    rle = wire::RleFromJson(out.at("mask"));
    CheckRle(rle);
  } catch (const std::exception& e) {
    throw InvalidOutputError(std::string("segment: malformed mask: ") + e.what());
  }
  auto mask = InstanceMask::FromRle(std::move(rle));
  if (mask.area == 0) throw InvalidOutputError("segment: empty mask");
  if (!box.Within(mask.rle.width, mask.rle.height)) throw InvalidOutputError("segment: bbox outside mask grid");
  if (!RleWithinBox(mask.rle, box)) throw InvalidOutputError("segment: mask has pixels outside the bbox");
  return mask;
}

std::optional<EmbeddingVector> PerceptionClient::FaceEmbedding(const ImageRef& image, const PixelBox& box) {
  if (box.Degenerate()) throw PreconditionError("face_embedding: degenerate bbox");
  const json out = Call(Capability::kFaceEmbedding,
                        json{{"image", wire::ImageRefJson(image)}, {"bbox", wire::BoxJson(box)}});
  if (!out.contains("embedding") || out.at("embedding").is_null()) return std::nullopt;
  return ToEmbedding(Capability::kFaceEmbedding, out.at("embedding"));
}

double PerceptionClient::AestheticScore(const ImageRef& image) {
  const json out = Call(Capability::kAestheticScore, json{{"image", wire::ImageRefJson(image)}});
  if (!out.contains("score") || !out.at("score").is_number()) {
    throw InvalidOutputError("aesthetic_score: score is missing or not finite");
  }
  const double s = out.at("score").get<double>();
  if (!std::isfinite(s)) throw InvalidOutputError("aesthetic_score: score is not finite");
  if (s < 0.0 || s > 10.0) throw InvalidOutputError("aesthetic_score: score outside [0, 10]");
  return s;
}

ImageRef PerceptionClient::Inpaint(const ImageRef& image, const Rle& mask) {
  CheckRle(mask);
  const json out = Call(Capability::kInpaint,
                        json{{"image", wire::ImageRefJson(image)}, {"mask", wire::RleJson(mask)}});
  try {
    return wire::ImageRefFromJson(out.at("image"));
  } catch (const std::exception& e) {
    throw InvalidOutputError(std::string("inpaint: ") + e.what());
  }
}

ImageRef PerceptionClient::GenerateImage(std::span<const ContextPart> context) {
  if (context.empty()) throw PreconditionError("generate_image: empty context");
  json parts = json::array();
  for (const auto& p : context) {
    if (p.image) {
      parts.push_back(json{{"image", wire::ImageRefJson(*p.image)}});
    } else {
      parts.push_back(json{{"text", p.text.value_or("")}});
    }
  }
  const json out = Call(Capability::kGenerateImage, json{{"context", parts}});
  try {
    return wire::ImageRefFromJson(out.at("image"));
  } catch (const std::exception& e) {
    throw InvalidOutputError(std::string("generate_image: ") + e.what());
  }
}

}  // namespace storyline
