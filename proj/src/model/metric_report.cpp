#include "storyline/model/metric_report.hpp"

#include <cmath>

namespace storyline {

std::string_view MetricName(Metric m) {
  switch (m) {
    case Metric::kSemanticAlignment:
      return "semantic_alignment";
    case Metric::kBackgroundConsistency:
      return "background_consistency";
    case Metric::kStyleConsistency:
      return "style_consistency";
    case Metric::kInstanceConsistencySingle:
      return "instance_consistency_s";
    case Metric::kInstanceConsistencyMulti:
      return "instance_consistency_m";
    case Metric::kInstanceIntegrity:
      return "instance_integrity";
    case Metric::kBleu4:
      return "bleu4";
  }
  return "unknown";
}

std::optional<double> MetricReport::Get(Metric m) const {
  auto it = scores.find(m);
  if (it == scores.end()) return std::nullopt;
  return it->second;
}

std::string MetricReport::CheckInvariants() const {
  for (const auto& [m, v] : scores) {
    if (!std::isfinite(v)) return std::string(MetricName(m)) + " is not finite";
    const bool unit = m == Metric::kBleu4 || m == Metric::kInstanceIntegrity;
    const double lo = unit ? 0.0 : -1.0;
    if (v < lo || v > 1.0) return std::string(MetricName(m)) + " out of range";
  }
  return {};
}

nlohmann::json ToJson(const MetricReport& report) {
  nlohmann::json scores = nlohmann::json::object();
  for (Metric m : kAllMetrics) {
    auto v = report.Get(m);
    scores[std::string(MetricName(m))] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  }
  nlohmann::json errors = nlohmann::json::object();
  for (const auto& [m, e] : report.errors) errors[std::string(MetricName(m))] = e;
  nlohmann::json flags = nlohmann::json::object();
  for (const auto& [m, f] : report.flags) flags[std::string(MetricName(m))] = f;
  return {{"story_id", report.story_id}, {"scores", scores}, {"errors", errors}, {"flags", flags}};
}

}  // namespace storyline
