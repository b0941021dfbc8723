#include "storyline/bench/bleu.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>

namespace storyline::bench {

namespace {

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts CountNgrams(std::span<const std::string> tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return counts;
}

bool IsBleuChar(char c) {
  return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
         c == '\'' || c == '-';
}

}  // namespace

std::vector<std::string> BleuTokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (IsBleuChar(lower)) {
      cur += lower;
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

double Bleu4(std::span<const std::string> candidate, std::span<const std::vector<std::string>> references) {
  if (references.empty()) throw std::invalid_argument("bleu4: no references");
  if (candidate.empty()) return 0.0;

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto cand = CountNgrams(candidate, n);
    NgramCounts max_ref;
    bool ref_has_order = false;
    for (const auto& ref : references) {
      const auto counts = CountNgrams(ref, n);
      ref_has_order = ref_has_order || !counts.empty();
      for (const auto& [gram, c] : counts) max_ref[gram] = std::max(max_ref[gram], c);
    }
    int total = 0;
    int clipped = 0;
    for (const auto& [gram, c] : cand) {
      total += c;
      const auto it = max_ref.find(gram);
      if (it != max_ref.end()) clipped += std::min(c, it->second);
    }
    if (n == 1 && clipped == 0) return 0.0;
    double p;
    if (total == 0 && !ref_has_order) {
      p = 1.0;
    } else if (clipped == 0) {
      p = kBleuEpsilon / std::max(1, total);
    } else {
      p = static_cast<double>(clipped) / total;
    }
    log_sum += 0.25 * std::log(p);
  }

  const auto c = static_cast<long>(candidate.size());
  long r = static_cast<long>(references.front().size());
  for (const auto& ref : references) {
    const auto len = static_cast<long>(ref.size());
    if (std::labs(len - c) < std::labs(r - c) || (std::labs(len - c) == std::labs(r - c) && len < r)) r = len;
  }
  const double bp = c > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return bp * std::exp(log_sum);
}

double Bleu4(std::string_view candidate, std::span<const std::string> references) {
  std::vector<std::vector<std::string>> refs;
  for (const auto& r : references) refs.push_back(BleuTokenize(r));
  const auto cand = BleuTokenize(candidate);
  return Bleu4(cand, refs);
}

}  // namespace storyline::bench
