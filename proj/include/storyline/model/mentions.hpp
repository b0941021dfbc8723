#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "storyline/model/types.hpp"

namespace storyline {

struct Token {
  std::string text;  // lowercased
  std::size_t start = 0;
  std::size_t end = 0;
};

// Maximal runs of ASCII letters/digits, with internal '-' or '\'' kept.
std::vector<Token> Tokenize(std::string_view text);

// Splits "woman0" (or "woman0's") into ("woman", 0) when the alphabetic part
// is a known noun.
std::optional<IdentityRef> ParseIndexedToken(std::string_view token);

// Noun runs in `text`: stopwords dropped, nouns kept by lexicon lookup,
// adjacent nouns merged. A run ending in an indexed token ("coffee cup0")
// carries that index. Ordered by span.
std::vector<EntityMention> FindNounMentions(std::string_view text);

// Identity-indexed mentions only.
std::vector<EntityMention> FindIndexedMentions(std::string_view text);

}  // namespace storyline
