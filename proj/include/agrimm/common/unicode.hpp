#pragma once

#include <string>
#include <string_view>

namespace agrimm {

/// NFC normalization of UTF-8 text. Invalid sequences become U+FFFD.
std::string nfc_utf8(std::string_view text);

/// Full Unicode default case folding followed by NFC.
std::string casefold_utf8(std::string_view text);

/// Trims Unicode whitespace at both ends.
std::string trim_utf8(std::string_view text);

std::u32string utf8_to_utf32(std::string_view text);
std::string utf32_to_utf8(std::u32string_view text);

}  // namespace agrimm
