#pragma once

#include <functional>
#include <string>

namespace agrimm {

/// Produces ISO-8601 UTC timestamps. Injected wherever artifacts record time
/// so mock runs can be made byte-reproducible.
using Clock = std::function<std::string()>;

std::string utc_now_iso8601();
Clock system_clock();
Clock fixed_clock(std::string timestamp);

}  // namespace agrimm
