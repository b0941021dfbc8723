#pragma once

#include "storyline/model/embedding.hpp"

namespace storyline::bench {

// Mean of f1[i] . f2[i] over normalized pairs. Throws std::invalid_argument
// on empty sets, length, dim or space mismatch.
double MeanPairwiseSimilarity(const FeatureSet& f1, const FeatureSet& f2);

// Matched similarity between current and base instances, normalized by
// |base|. Matching minimizes 1 - cosine; matched cosines are clamped to
// [0, 1]. Returns 0 for an empty current set. Throws std::invalid_argument on
// an empty base or incomparable vectors.
double InstanceIntegrity(const FeatureSet& base, const FeatureSet& current);

}  // namespace storyline::bench
