#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace storyline::lexicon {

// Function words, auxiliaries and common caption verbs. Lowercase input.
bool IsStopword(std::string_view token);

// Canonical (singular) noun for a lowercase token, if the token is a noun.
std::optional<std::string> NounLemma(std::string_view token);

bool IsPersonLabel(std::string_view label);
bool IsAnimalLabel(std::string_view label);

// Person-like or animal-like: the labels a refined caption must index.
inline bool IsSubjectLabel(std::string_view label) {
  return IsPersonLabel(label) || IsAnimalLabel(label);
}

// Class list handed to the detector when looking for foreground entities
// (people and animals) in background extraction.
std::span<const std::string_view> GenericEntityClasses();

}  // namespace storyline::lexicon
