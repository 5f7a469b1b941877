#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace agrimm::synthesis {

/// Sentence segmentation for caption validation: a sentence ends at '.', '!'
/// or '?' (plus any closing quotes/brackets) followed by whitespace or end of
/// text. A '.' ending a known abbreviation ("e.g.", "spp.", "var.", ...) or
/// a single-letter initial ("S. lycopersicum") does not end a sentence.
std::vector<std::string> split_sentences(std::string_view text);

/// Whitespace-delimited token count.
std::size_t word_count(std::string_view text);

/// True when `value` appears in `text` as a maximal run of ASCII digits, so
/// 61 matches "61 heads" but not "610" or "6.1".
bool contains_number(std::string_view text, std::uint64_t value);

}  // namespace agrimm::synthesis
