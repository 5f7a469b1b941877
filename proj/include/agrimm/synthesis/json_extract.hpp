#pragma once

#include <nlohmann/json.hpp>

#include <string_view>

namespace agrimm::synthesis {

/// Pulls the first JSON value out of free-form model output.
///
/// Markdown code fences (``` with an optional language tag) are removed,
/// then the first '{' or '[' is taken as the start of a top-level value and
/// scanned with string-aware bracket matching. The balanced span is parsed
/// strictly. Errc::NoJsonFound when there is no opener or it never closes;
/// Errc::StrictParseError(position) when the span is not valid JSON.
nlohmann::json extract_json(std::string_view text);

}  // namespace agrimm::synthesis
