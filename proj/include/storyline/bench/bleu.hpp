#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace storyline::bench {

inline constexpr double kBleuEpsilon = 1e-9;

// Lowercased runs of [a-z0-9'-].
std::vector<std::string> BleuTokenize(std::string_view text);

// Sentence BLEU-4: uniform weights, clipped n-gram precision against all
// references, brevity penalty against the closest reference length (ties go
// to the shorter one). A zero precision becomes epsilon / candidate n-gram
// count (at least 1). Returns 0 when no unigram matches. An order for which
// neither the candidate nor any reference has n-grams is vacuous and counts as
// precision 1, so short exact matches score 1.
double Bleu4(std::span<const std::string> candidate, std::span<const std::vector<std::string>> references);
double Bleu4(std::string_view candidate, std::span<const std::string> references);

}  // namespace storyline::bench
