#include "storyline/model/record.hpp"

#include <cmath>
#include <set>

#include "storyline/common/errors.hpp"
#include "storyline/model/mentions.hpp"

namespace storyline {

using nlohmann::json;

namespace {

json BoxJson(const PixelBox& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

json RleJson(const Rle& rle) {
  return json{{"counts", rle.counts}, {"size", json::array({rle.height, rle.width})}};
}

template <typename T>
T Get(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("record: missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("record: bad value for '") + key + "': " + e.what());
  }
}

PixelBox BoxFromJson(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("record: bbox must be [x_min, y_min, x_max, y_max]");
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ParseError("record: bbox entries must be integers");
  }
  return PixelBox{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

Rle RleFromJson(const json& j) {
  const auto size = Get<std::vector<int>>(j, "size");
  if (size.size() != 2) throw ParseError("record: mask size must be [h, w]");
  return Rle{size[0], size[1], Get<std::vector<std::uint32_t>>(j, "counts")};
}

}  // namespace

json ToJson(const DatasetRecord& r) {
  json entities = json::array();
  for (const auto& e : r.entities) {
    entities.push_back(json{{"label", e.label},
                            {"identity_index", e.identity_index},
                            {"bbox", BoxJson(e.bbox)},
                            {"confidence", e.confidence},
                            {"mask_rle", RleJson(e.mask_rle)}});
  }
  json missing = json::array();
  for (const auto& m : r.missing_in_image) {
    missing.push_back(json{{"label", m.label}, {"identity_index", m.identity_index}});
  }
  json parameters = json::object();
  for (const auto& [k, v] : r.provenance.parameters) parameters[k] = v;
  json backends = json::object();
  for (const auto& [k, v] : r.provenance.backends) backends[k] = v;
  return json{
      {"schema_version", r.schema_version},
      {"story_id", r.story_id},
      {"frame_index", r.frame_index},
      {"image_path", r.image_path},
      {"image_digest", r.image_digest},
      {"caption_raw", r.caption_raw},
      {"caption_refined", r.caption_refined},
      {"aesthetic_score", r.aesthetic_score ? json(*r.aesthetic_score) : json(nullptr)},
      {"entities", std::move(entities)},
      {"missing_in_image", std::move(missing)},
      {"provenance",
       json{{"backends", std::move(backends)},
            {"pipeline_version", r.provenance.pipeline_version},
            {"parameters", std::move(parameters)},
            {"warnings", r.provenance.warnings}}},
  };
}

DatasetRecord RecordFromJson(const json& j) {
  if (!j.is_object()) throw ParseError("record: expected a JSON object");
  DatasetRecord r;
  r.schema_version = Get<int>(j, "schema_version");
  r.story_id = Get<std::string>(j, "story_id");
  r.frame_index = Get<int>(j, "frame_index");
  r.image_path = Get<std::string>(j, "image_path");
  r.image_digest = Get<std::string>(j, "image_digest");
  r.caption_raw = Get<std::string>(j, "caption_raw");
  r.caption_refined = Get<std::string>(j, "caption_refined");
  if (!j.contains("aesthetic_score")) throw ParseError("record: missing key 'aesthetic_score'");
  const auto& score = j.at("aesthetic_score");
  if (!score.is_null()) {
    if (!score.is_number()) throw ParseError("record: aesthetic_score must be a number or null");
    r.aesthetic_score = score.get<double>();
  }
  const auto& entities = j.contains("entities") ? j.at("entities") : json();
  if (!entities.is_array()) throw ParseError("record: 'entities' must be an array");
  for (const auto& e : entities) {
    if (!e.contains("bbox")) throw ParseError("record: entity missing 'bbox'");
    if (!e.contains("mask_rle")) throw ParseError("record: entity missing 'mask_rle'");
    r.entities.push_back(RecordEntity{Get<std::string>(e, "label"), Get<int>(e, "identity_index"),
                                      BoxFromJson(e.at("bbox")), Get<double>(e, "confidence"),
                                      RleFromJson(e.at("mask_rle"))});
  }
  const auto& missing = j.contains("missing_in_image") ? j.at("missing_in_image") : json();
  if (!missing.is_array()) throw ParseError("record: 'missing_in_image' must be an array");
  for (const auto& m : missing) {
    r.missing_in_image.push_back(IdentityRef{Get<std::string>(m, "label"), Get<int>(m, "identity_index")});
  }
  if (!j.contains("provenance")) throw ParseError("record: missing key 'provenance'");
  const auto& p = j.at("provenance");
  r.provenance.backends = Get<std::map<std::string, std::string>>(p, "backends");
  r.provenance.pipeline_version = Get<std::string>(p, "pipeline_version");
  r.provenance.parameters = Get<std::map<std::string, double>>(p, "parameters");
  r.provenance.warnings = Get<std::vector<std::string>>(p, "warnings");
  return r;
}

std::string SerializeRecord(const DatasetRecord& record) { return ToJson(record).dump(); }

DatasetRecord ParseRecordLine(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("record: malformed JSON: ") + e.what());
  }
  return RecordFromJson(j);
}

std::vector<Violation> ValidateRecord(const DatasetRecord& r) {
  std::vector<Violation> out;
  auto add = [&out](std::string field, std::string rule) {
    out.push_back(Violation{std::move(field), std::move(rule)});
  };
  if (r.schema_version != kRecordSchemaVersion) add("schema_version", "unsupported-schema-version");
  if (r.story_id.empty()) add("story_id", "empty");
  if (r.frame_index < 0) add("frame_index", "negative");
  if (r.image_path.empty() && r.image_digest.empty()) add("image_path", "empty-image-ref");
  if (r.aesthetic_score) {
    if (!std::isfinite(*r.aesthetic_score)) {
      add("aesthetic_score", "non-finite");
    } else if (*r.aesthetic_score < 0.0 || *r.aesthetic_score > 10.0) {
      add("aesthetic_score", "out-of-range-0-10");
    }
  }
  if (r.entities.size() > static_cast<std::size_t>(kMaxInstancesPerFrame)) {
    add("entities", "instance-count-exceeds-8");
  }

  std::set<IdentityRef> present;
  std::optional<std::pair<int, int>> frame_size;
  for (std::size_t i = 0; i < r.entities.size(); ++i) {
    const auto& e = r.entities[i];
    const std::string f = "entities[" + std::to_string(i) + "]";
    if (e.label.empty()) add(f + ".label", "empty");
    if (e.identity_index < 0) add(f + ".identity_index", "negative");
    if (!present.insert(IdentityRef{e.label, e.identity_index}).second) {
      add(f + ".identity_index", "duplicate-identity-in-frame");
    }
    if (!(e.confidence >= 0.0 && e.confidence <= 1.0)) add(f + ".confidence", "out-of-range-0-1");
    const bool degenerate = e.bbox.Degenerate();
    if (degenerate) add(f + ".bbox", "bbox-degenerate");
    bool rle_ok = true;
    try {
      CheckRle(e.mask_rle);
    } catch (const ParseError&) {
      rle_ok = false;
      add(f + ".mask_rle", "counts-do-not-match-size");
    }
    if (!rle_ok) continue;
    const std::pair<int, int> size{e.mask_rle.height, e.mask_rle.width};
    if (frame_size && *frame_size != size) add(f + ".mask_rle.size", "inconsistent-image-size");
    if (!frame_size) frame_size = size;
    if (!degenerate && !e.bbox.Within(e.mask_rle.width, e.mask_rle.height)) {
      add(f + ".bbox", "bbox-out-of-image");
    }
    if (RleArea(e.mask_rle) == 0) add(f + ".mask_rle", "empty-mask");
    if (!degenerate && !RleWithinBox(e.mask_rle, e.bbox)) add(f + ".mask_rle", "mask-outside-bbox");
  }

  std::set<IdentityRef> missing(r.missing_in_image.begin(), r.missing_in_image.end());
  for (const auto& m : FindIndexedMentions(r.caption_refined)) {
    IdentityRef ref{m.label, *m.identity_index};
    if (!present.contains(ref) && !missing.contains(ref)) {
      add("caption_refined", "unresolved-identity-" + ref.Name());
    }
  }
  return out;
}

DatasetRecord ToRecord(const AnnotatedFrame& frame, std::string image_path,
                       RecordProvenance provenance) {
  DatasetRecord r;
  r.story_id = frame.frame.story_id;
  r.frame_index = frame.frame.index;
  r.image_path = std::move(image_path);
  r.image_digest = frame.frame.image.digest;
  r.caption_raw = frame.caption_raw.text;
  r.caption_refined = frame.caption_refined.text;
  r.aesthetic_score = frame.frame.aesthetic_score;
  for (const auto& inst : frame.instances) {
    r.entities.push_back(RecordEntity{inst.detection.label, inst.identity_index, inst.detection.bbox,
                                      inst.detection.confidence, inst.mask.rle});
  }
  r.missing_in_image = frame.missing_in_image;
  r.provenance = std::move(provenance);
  return r;
}

}  // namespace storyline
