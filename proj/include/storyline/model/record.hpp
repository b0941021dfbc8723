#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "storyline/model/mask.hpp"
#include "storyline/model/types.hpp"

namespace storyline {

inline constexpr int kRecordSchemaVersion = 1;
inline constexpr int kMaxInstancesPerFrame = 8;

struct RecordEntity {
  std::string label;
  int identity_index = 0;
  PixelBox bbox;
  double confidence = 0.0;
  Rle mask_rle;
};

struct RecordProvenance {
  // capability name -> backend id
  std::map<std::string, std::string> backends;
  std::string pipeline_version;
  // Tunables not fixed by the data itself (thresholds, floors).
  std::map<std::string, double> parameters;
  std::vector<std::string> warnings;
};

// One annotated frame; the on-disk atom of the dataset (one JSONL row).
struct DatasetRecord {
  int schema_version = kRecordSchemaVersion;
  std::string story_id;
  int frame_index = 0;
  std::string image_path;
  std::string image_digest;
  std::string caption_raw;
  std::string caption_refined;
  std::optional<double> aesthetic_score;
  std::vector<RecordEntity> entities;
  std::vector<IdentityRef> missing_in_image;
  RecordProvenance provenance;
};

nlohmann::json ToJson(const DatasetRecord& record);

// Throws ParseError when the JSON does not have the record's shape (missing
// keys, wrong types). Rule violations are left to ValidateRecord.
DatasetRecord RecordFromJson(const nlohmann::json& j);

// Canonical single-line form: keys sorted, no whitespace, no trailing newline.
std::string SerializeRecord(const DatasetRecord& record);

// Throws ParseError on malformed JSON or a malformed record shape.
DatasetRecord ParseRecordLine(std::string_view line);

struct Violation {
  std::string field;
  std::string rule;

  friend bool operator==(const Violation&, const Violation&) = default;
};

// Empty iff every record invariant holds.
std::vector<Violation> ValidateRecord(const DatasetRecord& record);

DatasetRecord ToRecord(const AnnotatedFrame& frame, std::string image_path,
                       RecordProvenance provenance);

}  // namespace storyline
