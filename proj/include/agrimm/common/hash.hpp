#pragma once

#include <string>
#include <string_view>

namespace agrimm {

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

/// First `chars` hex digits of the SHA-256; used for compact stable ids.
std::string short_hash(std::string_view bytes, std::size_t chars = 12);

}  // namespace agrimm
