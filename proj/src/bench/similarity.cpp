#include "storyline/bench/similarity.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "storyline/bench/assignment.hpp"

namespace storyline::bench {

double MeanPairwiseSimilarity(const FeatureSet& f1, const FeatureSet& f2) {
  if (f1.empty() || f2.empty()) throw std::invalid_argument("similarity: empty feature set");
  if (f1.size() != f2.size()) throw std::invalid_argument("similarity: feature sets differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < f1.size(); ++i) sum += Cosine(f1[i], f2[i]);
  return sum / static_cast<double>(f1.size());
}

double InstanceIntegrity(const FeatureSet& base, const FeatureSet& current) {
  if (base.empty()) throw std::invalid_argument("instance integrity: empty base set");
  if (current.empty()) return 0.0;
  std::vector<std::vector<double>> sim(current.size(), std::vector<double>(base.size()));
  std::vector<std::vector<double>> cost(current.size(), std::vector<double>(base.size()));
  for (std::size_t i = 0; i < current.size(); ++i) {
    for (std::size_t j = 0; j < base.size(); ++j) {
      sim[i][j] = Cosine(current[i], base[j]);
      cost[i][j] = 1.0 - sim[i][j];
    }
  }
  double total = 0.0;
  for (const auto& [i, j] : SolveAssignment(CostMatrix::FromRows(cost))) {
    total += std::clamp(sim[i][j], 0.0, 1.0);
  }
  return total / static_cast<double>(base.size());
}

}  // namespace storyline::bench
