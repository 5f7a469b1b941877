#include "agrimm/synthesis/text_checks.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace agrimm::synthesis {

namespace {

constexpr std::array<std::string_view, 24> kAbbreviations = {
    "e.g", "i.e", "etc", "vs", "cf", "approx", "ca", "spp", "sp", "ssp", "subsp", "var",
    "cv", "syn", "dr", "mr", "mrs", "ms", "prof", "st", "no", "fig", "al", "resp",
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

// word immediately preceding the '.' at `dot`
std::string_view word_before(std::string_view text, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !is_space(text[b - 1]) && text[b - 1] != '(' && text[b - 1] != '"') --b;
  return text.substr(b, dot - b);
}

bool is_abbreviation(std::string_view word) {
  if (word.size() == 1 && std::isupper(static_cast<unsigned char>(word[0]))) return true;
  std::string lower(word);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), lower) != kAbbreviations.end();
}

std::string trimmed(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t end = i + 1;
    while (end < text.size() && (text[end] == '.' || text[end] == '!' || text[end] == '?')) ++end;
    while (end < text.size() && is_closer(text[end])) ++end;
    if (end < text.size() && !is_space(text[end])) continue;
    if (c == '.' && end == i + 1 && is_abbreviation(word_before(text, i))) continue;
    auto sentence = trimmed(text.substr(start, end - start));
    if (!sentence.empty()) out.push_back(std::move(sentence));
    start = end;
    i = end - 1;
  }
  auto tail = trimmed(text.substr(start));
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

bool contains_number(std::string_view text, std::uint64_t value) {
  const std::string needle = std::to_string(value);
  auto digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  std::size_t i = 0;
  while (i < text.size()) {
    if (!digit(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && digit(text[j])) ++j;
    const bool decimal_tail = j + 1 < text.size() && text[j] == '.' && digit(text[j + 1]);
    const bool decimal_head = i >= 2 && text[i - 1] == '.' && digit(text[i - 2]);
    if (!decimal_tail && !decimal_head && text.substr(i, j - i) == needle) return true;
    i = j;
  }
  return false;
}

}  // namespace agrimm::synthesis
