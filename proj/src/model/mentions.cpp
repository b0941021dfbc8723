#include "storyline/model/mentions.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "storyline/model/lexicon.hpp"

namespace storyline {

namespace {

bool IsAlnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

struct NounToken {
  std::string lemma;
  std::optional<int> index;
};

std::optional<NounToken> AsNoun(std::string_view token) {
  if (auto ref = ParseIndexedToken(token)) return NounToken{ref->label, ref->identity_index};
  if (lexicon::IsStopword(token)) return std::nullopt;
  if (auto lemma = lexicon::NounLemma(token)) return NounToken{*lemma, std::nullopt};
  return std::nullopt;
}

}  // namespace

std::string_view ToString(CaptionKind kind) {
  switch (kind) {
    case CaptionKind::kRaw:
      return "raw";
    case CaptionKind::kSequence:
      return "sequence";
    case CaptionKind::kRefined:
      return "refined";
  }
  return "raw";
}

bool DetectionOrder(const Detection& a, const Detection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.bbox.y_min != b.bbox.y_min) return a.bbox.y_min < b.bbox.y_min;
  if (a.bbox.x_min != b.bbox.x_min) return a.bbox.x_min < b.bbox.x_min;
  if (a.label != b.label) return a.label < b.label;
  if (a.bbox.y_max != b.bbox.y_max) return a.bbox.y_max < b.bbox.y_max;
  return a.bbox.x_max < b.bbox.x_max;
}

std::vector<Token> Tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!IsAlnum(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size()) {
      if (IsAlnum(text[j])) {
        ++j;
      } else if ((text[j] == '-' || text[j] == '\'') && j + 1 < text.size() && IsAlnum(text[j + 1])) {
        j += 2;
      } else {
        break;
      }
    }
    Token t{std::string(text.substr(i, j - i)), i, j};
    std::transform(t.text.begin(), t.text.end(), t.text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    tokens.push_back(std::move(t));
    i = j;
  }
  return tokens;
}

std::optional<IdentityRef> ParseIndexedToken(std::string_view token) {
  if (token.ends_with("'s")) token.remove_suffix(2);
  std::size_t split = 0;
  while (split < token.size() && std::isalpha(static_cast<unsigned char>(token[split]))) ++split;
  if (split == 0 || split == token.size()) return std::nullopt;
  for (std::size_t k = split; k < token.size(); ++k) {
    if (!std::isdigit(static_cast<unsigned char>(token[k]))) return std::nullopt;
  }
  std::string base(token.substr(0, split));
  std::transform(base.begin(), base.end(), base.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  auto lemma = lexicon::NounLemma(base);
  // The index belongs to the written label; "hands0" is not a valid identity.
  if (!lemma || *lemma != base) return std::nullopt;
  int index = 0;
  const auto digits = token.substr(split);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  return IdentityRef{base, index};
}

std::vector<EntityMention> FindNounMentions(std::string_view text) {
  std::vector<EntityMention> out;
  const auto tokens = Tokenize(text);
  std::size_t i = 0;
  while (i < tokens.size()) {
    auto first = AsNoun(tokens[i].text);
    if (!first) {
      ++i;
      continue;
    }
    EntityMention m;
    m.start = tokens[i].start;
    m.end = tokens[i].end;
    m.label = first->lemma;
    m.identity_index = first->index;
    std::size_t j = i + 1;
    // Merge following nouns while the run has no index yet and the tokens are
    // separated by a single space. Noun modifiers are uninflected, so a plural
    // ends the run ("hands cup0" is a verb and an object, "coffee cup0" is one
    // thing).
    bool inflected = first->lemma != tokens[i].text;
    while (!m.identity_index && !inflected && j < tokens.size() && tokens[j].start == tokens[j - 1].end + 1 &&
           text[tokens[j - 1].end] == ' ') {
      auto next = AsNoun(tokens[j].text);
      if (!next) break;
      inflected = !next->index && next->lemma != tokens[j].text;
      m.end = tokens[j].end;
      m.label += ' ';
      m.label += next->lemma;
      m.identity_index = next->index;
      ++j;
    }
    m.surface = std::string(text.substr(m.start, m.end - m.start));
    out.push_back(std::move(m));
    i = j;
  }
  return out;
}

std::vector<EntityMention> FindIndexedMentions(std::string_view text) {
  auto all = FindNounMentions(text);
  std::erase_if(all, [](const EntityMention& m) { return !m.identity_index.has_value(); });
  return all;
}

}  // namespace storyline
