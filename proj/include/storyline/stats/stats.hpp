#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "storyline/model/record.hpp"

namespace storyline::stats {

// Fixed-edge histogram. Bin i covers [edges[i], edges[i+1]); the top edge
// itself lands in the last bin. Values above the top edge go to `overflow`
// when the histogram has one, and are rejected otherwise.
class Histogram {
 public:
  Histogram(std::vector<double> edges, bool with_overflow);
  static Histogram Uniform(double lo, double hi, int bins, bool with_overflow = false);

  // Returns false (and counts nothing) for values outside the range.
  bool Add(double value);

  const std::vector<double>& edges() const { return edges_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::int64_t overflow() const { return overflow_; }
  std::int64_t samples() const { return samples_; }

  nlohmann::json ToJson() const;

 private:
  std::vector<double> edges_;
  std::vector<std::int64_t> counts_;
  bool with_overflow_;
  std::int64_t overflow_ = 0;
  std::int64_t samples_ = 0;
};

struct StatsReport {
  Histogram confidence = Histogram::Uniform(0.0, 1.0, 20);
  // Unit bins 0..60, then overflow.
  Histogram caption_words = Histogram::Uniform(-0.5, 60.5, 61, true);
  // Unit bins 0..10, then overflow.
  Histogram instances = Histogram::Uniform(-0.5, 10.5, 11, true);
  Histogram aesthetic = Histogram::Uniform(0.0, 10.0, 40);
  std::map<std::string, std::int64_t> label_frequency;
  std::int64_t records = 0;
  std::int64_t entities = 0;
  std::int64_t invalid_lines = 0;
  std::int64_t missing_aesthetic = 0;

  void Add(const DatasetRecord& record);
  double MasksPerFrame() const { return records == 0 ? 0.0 : static_cast<double>(entities) / records; }
  nlohmann::json ToJson() const;
};

// Whitespace-separated words in the caption.
int WordCount(std::string_view caption);

// Reads JSONL; blank lines are skipped, lines that fail to parse or validate
// count as invalid.
StatsReport ComputeStats(std::istream& in);

}  // namespace storyline::stats
