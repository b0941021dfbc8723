#include "storyline/pipeline/export.hpp"

#include <system_error>

#include "storyline/common/digest.hpp"
#include "storyline/common/errors.hpp"
#include "storyline/common/log.hpp"

namespace storyline::pipeline {

JsonlFileSink::JsonlFileSink(std::filesystem::path path)
    : path_(std::move(path)), tmp_(path_.string() + ".tmp") {}

JsonlFileSink::~JsonlFileSink() {
  if (out_.is_open() && !closed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
  }
}

std::filesystem::path JsonlFileSink::PartialMarker(const std::filesystem::path& path) {
  return path.string() + ".partial";
}

void JsonlFileSink::Fail(const std::string& why) {
  try {
    WriteFileAtomic(PartialMarker(path_), std::to_string(written_) + " records written before: " + why + "\n");
  } catch (const std::exception& e) {
    log::Error(std::string("cannot write partial marker: ") + e.what());
  }
  throw IoError(path_.string() + ": " + why);
}

void JsonlFileSink::Write(const DatasetRecord& record) {
  if (closed_) throw IoError(path_.string() + ": sink already closed");
  if (!out_.is_open()) {
    std::error_code ec;
    std::filesystem::remove(PartialMarker(path_), ec);
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) Fail("cannot open " + tmp_.string());
  }
  out_ << SerializeRecord(record) << '\n';
  if (!out_) Fail("write failed");
  ++written_;
}

void JsonlFileSink::Close() {
  if (closed_) return;
  closed_ = true;
  if (!out_.is_open()) return;
  out_.close();
  if (!out_) Fail("close failed");
  std::error_code ec;
  std::filesystem::rename(tmp_, path_, ec);
  if (ec) Fail("rename failed: " + ec.message());
}

DatasetRecord BuildRecord(const FrameState& frame, const RecordProvenance& base) {
  RecordProvenance p = base;
  p.warnings = frame.warnings;
  return ToRecord(frame.ToAnnotated(), frame.source_path, std::move(p));
}

int ExportRecords(const Story& story, const RecordProvenance& base, RecordSink& sink) {
  std::vector<DatasetRecord> records;
  for (const auto& f : story.frames) {
    auto r = BuildRecord(f, base);
    const auto violations = ValidateRecord(r);
    if (!violations.empty()) {
      throw StageError(story.story_id, f.frame.frame_id, "export", "",
                       "record violates " + violations.front().field + ": " + violations.front().rule);
    }
    records.push_back(std::move(r));
  }
  for (const auto& r : records) sink.Write(r);
  return static_cast<int>(records.size());
}

}  // namespace storyline::pipeline
