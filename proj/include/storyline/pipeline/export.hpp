#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "storyline/model/record.hpp"
#include "storyline/pipeline/story.hpp"

namespace storyline::pipeline {

class RecordSink {
 public:
  virtual ~RecordSink() = default;
  // Throws IoError.
  virtual void Write(const DatasetRecord& record) = 0;
  virtual void Close() = 0;
};

// Writes JSONL to `<path>.tmp` and renames on Close. Nothing is created until
// the first record arrives. A failed write leaves `<path>.partial` behind.
class JsonlFileSink : public RecordSink {
 public:
  explicit JsonlFileSink(std::filesystem::path path);
  ~JsonlFileSink() override;

  void Write(const DatasetRecord& record) override;
  void Close() override;
  int written() const { return written_; }

  static std::filesystem::path PartialMarker(const std::filesystem::path& path);

 private:
  void Fail(const std::string& why);

  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  int written_ = 0;
  bool closed_ = false;
};

class MemorySink : public RecordSink {
 public:
  void Write(const DatasetRecord& record) override { lines_.push_back(SerializeRecord(record)); }
  void Close() override {}
  const std::vector<std::string>& lines() const { return lines_; }

 private:
  std::vector<std::string> lines_;
};

// Per-record provenance: run-wide fields plus the frame's own warnings.
DatasetRecord BuildRecord(const FrameState& frame, const RecordProvenance& base);

// One record per frame in frame order; every record is validated first.
// Returns the number written. Throws StageError("export") on an invalid
// record and IoError from the sink.
int ExportRecords(const Story& story, const RecordProvenance& base, RecordSink& sink);

}  // namespace storyline::pipeline
