#include "agrimm/metrics/tokenizer.hpp"

#include "agrimm/common/unicode.hpp"

#include <unicode/uchar.h>

namespace agrimm::metrics {

namespace {

bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0; }
bool is_punct(char32_t c) { return u_ispunct(static_cast<UChar32>(c)) != 0; }
bool is_dash(char32_t c) {
  return c != U'-' && u_charType(static_cast<UChar32>(c)) == U_DASH_PUNCTUATION;
}

void emit(std::u32string& piece, std::vector<std::string>& out) {
  std::size_t begin = 0;
  std::size_t end = piece.size();
  while (begin < end && is_punct(piece[begin])) ++begin;
  while (end > begin && is_punct(piece[end - 1])) --end;
  if (begin < end) out.push_back(utf32_to_utf8(std::u32string_view(piece).substr(begin, end - begin)));
  piece.clear();
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  TokenSeq seq;
  seq.source_text = std::string(text);
  const std::u32string s = utf8_to_utf32(casefold_utf8(text));
  std::u32string piece;
  for (std::size_t i = 0; i < s.size();) {
    const char32_t c = s[i];
    if (is_space(c)) {
      emit(piece, seq.tokens);
      ++i;
      continue;
    }
    if (is_punct(c)) {
      std::size_t run = i;
      while (run < s.size() && is_punct(s[run])) ++run;
      if (run - i >= 2 || is_dash(c)) {
        emit(piece, seq.tokens);
        i = run;
        continue;
      }
    }
    piece.push_back(c);
    ++i;
  }
  emit(piece, seq.tokens);
  return seq;
}

}  // namespace agrimm::metrics
