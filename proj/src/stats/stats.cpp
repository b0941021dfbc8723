#include "storyline/stats/stats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "storyline/common/errors.hpp"

namespace storyline::stats {

using nlohmann::json;

Histogram::Histogram(std::vector<double> edges, bool with_overflow)
    : edges_(std::move(edges)), with_overflow_(with_overflow) {
  if (edges_.size() < 2 || !std::is_sorted(edges_.begin(), edges_.end())) {
    throw std::invalid_argument("histogram: need at least two ascending edges");
  }
  counts_.assign(edges_.size() - 1, 0);
}

Histogram Histogram::Uniform(double lo, double hi, int bins, bool with_overflow) {
  std::vector<double> edges;
  for (int i = 0; i <= bins; ++i) edges.push_back(lo + (hi - lo) * i / bins);
  return Histogram(std::move(edges), with_overflow);
}

bool Histogram::Add(double value) {
  if (!std::isfinite(value) || value < edges_.front()) return false;
  if (value > edges_.back()) {
    if (!with_overflow_) return false;
    ++overflow_;
    ++samples_;
    return true;
  }
  auto it = std::upper_bound(edges_.begin(), edges_.end(), value);
  auto bin = static_cast<std::size_t>(it - edges_.begin());
  bin = bin == 0 ? 0 : bin - 1;
  bin = std::min(bin, counts_.size() - 1);
  ++counts_[bin];
  ++samples_;
  return true;
}

json Histogram::ToJson() const {
  json j{{"edges", edges_}, {"counts", counts_}, {"samples", samples_}};
  if (with_overflow_) j["overflow"] = overflow_;
  return j;
}

int WordCount(std::string_view caption) {
  int n = 0;
  bool in_word = false;
  for (char c : caption) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

void StatsReport::Add(const DatasetRecord& record) {
  ++records;
  entities += static_cast<std::int64_t>(record.entities.size());
  for (const auto& e : record.entities) {
    confidence.Add(e.confidence);
    ++label_frequency[e.label];
  }
  caption_words.Add(WordCount(record.caption_refined.empty() ? record.caption_raw : record.caption_refined));
  instances.Add(static_cast<double>(record.entities.size()));
  if (record.aesthetic_score) {
    aesthetic.Add(*record.aesthetic_score);
  } else {
    ++missing_aesthetic;
  }
}

json StatsReport::ToJson() const {
  return {{"records", records},
          {"entities", entities},
          {"invalid_lines", invalid_lines},
          {"missing_aesthetic", missing_aesthetic},
          {"masks_per_frame", MasksPerFrame()},
          {"label_frequency", label_frequency},
          {"histograms",
           {{"bbox_confidence", confidence.ToJson()},
            {"caption_word_count", caption_words.ToJson()},
            {"instances_per_frame", instances.ToJson()},
            {"aesthetic_score", aesthetic.ToJson()}}}};
}

StatsReport ComputeStats(std::istream& in) {
  StatsReport report;
  std::string line;
  while (std::getline(in, line)) {
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; })) continue;
    try {
      const auto record = ParseRecordLine(line);
      if (!ValidateRecord(record).empty()) {
        ++report.invalid_lines;
        continue;
      }
      report.Add(record);
    } catch (const ParseError&) {
      ++report.invalid_lines;
    }
  }
  return report;
}

}  // namespace storyline::stats
