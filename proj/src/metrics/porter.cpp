#include "agrimm/metrics/porter.hpp"

#include "agrimm/common/unicode.hpp"

#include <functional>

namespace agrimm::metrics {

namespace {

using Word = std::u32string;

bool is_consonant(const Word& w, std::size_t i) {
  switch (w[i]) {
    case U'a': case U'e': case U'i': case U'o': case U'u': return false;
    case U'y': return i == 0 || !is_consonant(w, i - 1);
    default: return true;
  }
}

// Number of VC sequences in [C](VC)^m[V].
int measure(const Word& w) {
  int m = 0;
  bool prev_vowel = false;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const bool consonant = is_consonant(w, i);
    if (consonant && prev_vowel) ++m;
    prev_vowel = !consonant;
  }
  return m;
}

bool contains_vowel(const Word& w) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!is_consonant(w, i)) return true;
  }
  return false;
}

bool ends_double_consonant(const Word& w) {
  const auto n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

bool ends_cvc(const Word& w) {
  const auto n = w.size();
  return n >= 3 && is_consonant(w, n - 3) && !is_consonant(w, n - 2) && is_consonant(w, n - 1) &&
         w[n - 1] != U'w' && w[n - 1] != U'x' && w[n - 1] != U'y';
}

bool ends_with(const Word& w, std::u32string_view suffix) {
  return w.size() >= suffix.size() && std::u32string_view(w).substr(w.size() - suffix.size()) == suffix;
}

Word drop(const Word& w, std::size_t n) { return w.substr(0, w.size() - n); }

struct Rule {
  std::u32string_view suffix;
  std::u32string_view replacement;
  std::function<bool(const Word&)> condition;
};

// The first rule whose suffix matches decides; a failed condition leaves the
// word unchanged.
Word apply_rules(const Word& w, const std::vector<Rule>& rules) {
  for (const auto& rule : rules) {
    if (!ends_with(w, rule.suffix)) continue;
    Word stem = drop(w, rule.suffix.size());
    if (!rule.condition || rule.condition(stem)) return stem + Word(rule.replacement);
    return w;
  }
  return w;
}

bool m_positive(const Word& s) { return measure(s) > 0; }
bool m_above_one(const Word& s) { return measure(s) > 1; }

Word step1a(const Word& w) {
  static const std::vector<Rule> rules = {
      {U"sses", U"ss", nullptr}, {U"ies", U"i", nullptr}, {U"ss", U"ss", nullptr}, {U"s", U"", nullptr}};
  return apply_rules(w, rules);
}

Word step1b(const Word& w) {
  if (ends_with(w, U"eed")) {
    Word stem = drop(w, 3);
    return measure(stem) > 0 ? stem + U"ee" : w;
  }
  Word stem;
  bool removed = false;
  for (std::u32string_view suffix : {std::u32string_view(U"ed"), std::u32string_view(U"ing")}) {
    if (ends_with(w, suffix)) {
      stem = drop(w, suffix.size());
      if (contains_vowel(stem)) {
        removed = true;
        break;
      }
    }
  }
  if (!removed) return w;

  if (ends_with(stem, U"at")) return stem + U"e";
  if (ends_with(stem, U"bl")) return stem + U"e";
  if (ends_with(stem, U"iz")) return stem + U"e";
  if (ends_double_consonant(stem)) {
    const char32_t last = stem.back();
    if (last != U'l' && last != U's' && last != U'z') return drop(stem, 1);
    return stem;
  }
  if (measure(stem) == 1 && ends_cvc(stem)) return stem + U"e";
  return stem;
}

Word step1c(const Word& w) {
  if (ends_with(w, U"y")) {
    Word stem = drop(w, 1);
    if (contains_vowel(stem)) return stem + U"i";
  }
  return w;
}

Word step2(const Word& w) {
  static const std::vector<Rule> rules = {
      {U"ational", U"ate", m_positive}, {U"tional", U"tion", m_positive}, {U"enci", U"ence", m_positive},
      {U"anci", U"ance", m_positive},   {U"izer", U"ize", m_positive},    {U"abli", U"able", m_positive},
      {U"alli", U"al", m_positive},     {U"entli", U"ent", m_positive},   {U"eli", U"e", m_positive},
      {U"ousli", U"ous", m_positive},   {U"ization", U"ize", m_positive}, {U"ation", U"ate", m_positive},
      {U"ator", U"ate", m_positive},    {U"alism", U"al", m_positive},    {U"iveness", U"ive", m_positive},
      {U"fulness", U"ful", m_positive}, {U"ousness", U"ous", m_positive}, {U"aliti", U"al", m_positive},
      {U"iviti", U"ive", m_positive},   {U"biliti", U"ble", m_positive}};
  return apply_rules(w, rules);
}

Word step3(const Word& w) {
  static const std::vector<Rule> rules = {
      {U"icate", U"ic", m_positive}, {U"ative", U"", m_positive}, {U"alize", U"al", m_positive},
      {U"iciti", U"ic", m_positive}, {U"ical", U"ic", m_positive}, {U"ful", U"", m_positive},
      {U"ness", U"", m_positive}};
  return apply_rules(w, rules);
}

Word step4(const Word& w) {
  static const std::vector<Rule> rules = {
      {U"al", U"", m_above_one},   {U"ance", U"", m_above_one}, {U"ence", U"", m_above_one},
      {U"er", U"", m_above_one},   {U"ic", U"", m_above_one},   {U"able", U"", m_above_one},
      {U"ible", U"", m_above_one}, {U"ant", U"", m_above_one},  {U"ement", U"", m_above_one},
      {U"ment", U"", m_above_one}, {U"ent", U"", m_above_one},
      {U"ion", U"", [](const Word& s) { return measure(s) > 1 && (s.back() == U's' || s.back() == U't'); }},
      {U"ou", U"", m_above_one},   {U"ism", U"", m_above_one},  {U"ate", U"", m_above_one},
      {U"iti", U"", m_above_one},  {U"ous", U"", m_above_one},  {U"ive", U"", m_above_one},
      {U"ize", U"", m_above_one}};
  return apply_rules(w, rules);
}

Word step5a(const Word& w) {
  if (!ends_with(w, U"e")) return w;
  Word stem = drop(w, 1);
  const int m = measure(stem);
  if (m > 1 || (m == 1 && !ends_cvc(stem))) return stem;
  return w;
}

Word step5b(const Word& w) {
  if (ends_with(w, U"ll") && measure(drop(w, 1)) > 1) return drop(w, 1);
  return w;
}

}  // namespace

std::string porter_stem(std::string_view word) {
  Word w = utf8_to_utf32(word);
  if (w.empty()) return {};
  w = step1a(w);
  w = step1b(w);
  w = step1c(w);
  w = step2(w);
  w = step3(w);
  w = step4(w);
  w = step5a(w);
  w = step5b(w);
  return utf32_to_utf8(w);
}

}  // namespace agrimm::metrics
