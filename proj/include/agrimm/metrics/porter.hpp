#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace agrimm::metrics {

/// Porter's 1980 suffix-stripping algorithm, original rule set, applied to
/// the word as given (no lowercasing).
std::string porter_stem(std::string_view word);

using Stemmer = std::function<std::string(std::string_view)>;

}  // namespace agrimm::metrics
