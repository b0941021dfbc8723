#include "storyline/model/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace storyline {

namespace {

double L2(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<double> values, std::string space)
    : EmbeddingVector(std::move(values), std::move(space), false) {
  normalized_ = std::abs(Norm() - 1.0) <= 1e-6;
}

EmbeddingVector::EmbeddingVector(std::vector<double> values, std::string space, bool normalized)
    : values_(std::move(values)), space_(std::move(space)), normalized_(normalized) {
  if (values_.empty()) throw std::invalid_argument("embedding must have dim >= 1");
  for (double x : values_) {
    if (!std::isfinite(x)) throw std::invalid_argument("embedding has a non-finite entry");
  }
}

EmbeddingVector EmbeddingVector::Normalized(std::vector<double> values, std::string space) {
  return EmbeddingVector(std::move(values), std::move(space)).Normalize();
}

double EmbeddingVector::Norm() const { return L2(values_); }

EmbeddingVector EmbeddingVector::Normalize() const {
  const double n = Norm();
  if (n == 0.0) throw std::invalid_argument("cannot normalize a zero embedding");
  std::vector<double> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(), [n](double x) { return x / n; });
  return EmbeddingVector(std::move(out), space_, true);
}

void CheckComparable(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("embedding dim mismatch: " + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()));
  }
  if (!a.space().empty() && !b.space().empty() && a.space() != b.space()) {
    throw std::invalid_argument("embedding space mismatch: " + a.space() + " vs " + b.space());
  }
}

double Dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  CheckComparable(a, b);
  double sum = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) sum += av[i] * bv[i];
  return sum;
}

double Cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  CheckComparable(a, b);
  const EmbeddingVector an = a.normalized() ? a : a.Normalize();
  const EmbeddingVector bn = b.normalized() ? b : b.Normalize();
  return std::clamp(Dot(an, bn), -1.0, 1.0);
}

FeatureSet::FeatureSet(std::vector<EmbeddingVector> vectors, std::vector<std::string> source_ids) {
  if (vectors.size() != source_ids.size()) {
    throw std::invalid_argument("feature set: source_ids length differs from vectors length");
  }
  for (std::size_t i = 0; i < vectors.size(); ++i) Add(std::move(vectors[i]), std::move(source_ids[i]));
}

void FeatureSet::Add(EmbeddingVector vector, std::string source_id) {
  if (!vectors_.empty()) CheckComparable(vectors_.front(), vector);
  if (!vectors_.empty() && space().empty() && !vector.space().empty()) {
    for (const auto& v : vectors_) CheckComparable(v, vector);
  }
  vectors_.push_back(std::move(vector));
  source_ids_.push_back(std::move(source_id));
}

const std::string& FeatureSet::space() const {
  static const std::string kNone;
  for (const auto& v : vectors_) {
    if (!v.space().empty()) return v.space();
  }
  return kNone;
}

}  // namespace storyline
