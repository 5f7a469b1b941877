#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace agrimm::metrics {

struct TokenSeq {
  std::vector<std::string> tokens;
  std::string source_text;
};

/// The one tokenizer every metric uses. NFC + casefold, then splits on
/// Unicode whitespace, on dash punctuation other than a lone hyphen, and on
/// runs of two or more punctuation characters; leading and trailing
/// punctuation is stripped from each piece and empty pieces are dropped.
TokenSeq tokenize(std::string_view text);

}  // namespace agrimm::metrics
