#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace storyline {

// Fixed-dimension real feature vector. `space` names the embedding space the
// vector lives in; vectors from different non-empty spaces are never compared.
class EmbeddingVector {
 public:
  // Throws std::invalid_argument on an empty vector or non-finite entries.
  explicit EmbeddingVector(std::vector<double> values, std::string space = {});

  // L2-normalized copy of `values`; throws std::invalid_argument on a zero vector.
  static EmbeddingVector Normalized(std::vector<double> values, std::string space = {});

  std::span<const double> values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  bool normalized() const { return normalized_; }
  const std::string& space() const { return space_; }

  double Norm() const;
  EmbeddingVector Normalize() const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  EmbeddingVector(std::vector<double> values, std::string space, bool normalized);

  std::vector<double> values_;
  std::string space_;
  bool normalized_ = false;
};

// Throws std::invalid_argument on dim mismatch or on two different non-empty spaces.
void CheckComparable(const EmbeddingVector& a, const EmbeddingVector& b);

double Dot(const EmbeddingVector& a, const EmbeddingVector& b);

// Dot product of the L2-normalized inputs, clamped to [-1, 1].
double Cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// Ordered vectors sharing one dim and space, with parallel source ids.
class FeatureSet {
 public:
  FeatureSet() = default;
  FeatureSet(std::vector<EmbeddingVector> vectors, std::vector<std::string> source_ids);

  void Add(EmbeddingVector vector, std::string source_id);

  std::size_t size() const { return vectors_.size(); }
  bool empty() const { return vectors_.empty(); }
  // 0 when empty.
  std::size_t dim() const { return vectors_.empty() ? 0 : vectors_.front().dim(); }
  const std::string& space() const;

  const EmbeddingVector& operator[](std::size_t i) const { return vectors_[i]; }
  const std::vector<EmbeddingVector>& vectors() const { return vectors_; }
  const std::vector<std::string>& source_ids() const { return source_ids_; }

 private:
  std::vector<EmbeddingVector> vectors_;
  std::vector<std::string> source_ids_;
};

}  // namespace storyline
