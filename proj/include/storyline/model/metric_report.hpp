#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace storyline {

enum class Metric {
  kSemanticAlignment,
  kBackgroundConsistency,
  kStyleConsistency,
  kInstanceConsistencySingle,
  kInstanceConsistencyMulti,
  kInstanceIntegrity,
  kBleu4,
};

inline constexpr std::array<Metric, 7> kAllMetrics = {
    Metric::kSemanticAlignment,         Metric::kBackgroundConsistency,
    Metric::kStyleConsistency,          Metric::kInstanceConsistencySingle,
    Metric::kInstanceConsistencyMulti,  Metric::kInstanceIntegrity,
    Metric::kBleu4,
};

std::string_view MetricName(Metric m);

// Per-sequence scores. A metric that could not be defined for the sequence is
// absent; a metric whose computation failed is absent with an entry in
// `errors`.
struct MetricReport {
  std::string story_id;
  std::map<Metric, double> scores;
  std::map<Metric, std::string> errors;
  // Metric-specific markers, e.g. "no_instance" on instance consistency.
  std::map<Metric, std::string> flags;

  std::optional<double> Get(Metric m) const;
  void Set(Metric m, double value) { scores[m] = value; }

  // Empty when all present scores are finite and inside their ranges.
  std::string CheckInvariants() const;
};

nlohmann::json ToJson(const MetricReport& report);

}  // namespace storyline
