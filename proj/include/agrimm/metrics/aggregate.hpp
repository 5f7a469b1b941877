#pragma once

#include "agrimm/metrics/lexical.hpp"

#include <map>
#include <span>
#include <string>

namespace agrimm::metrics {

/// Mean value per metric name, x100, rounded half-even to two decimals.
/// Errc::EmptyInput for an empty list.
std::map<std::string, double> corpus_aggregate(std::span<const MetricScore> per_item);

}  // namespace agrimm::metrics
