#include "agrimm/metrics/aggregate.hpp"

#include "agrimm/common/error.hpp"
#include "agrimm/common/numeric.hpp"

namespace agrimm::metrics {

std::map<std::string, double> corpus_aggregate(std::span<const MetricScore> per_item) {
  if (per_item.empty()) throw Error(Errc::EmptyInput, "per_item", "nothing to aggregate");
  std::map<std::string, std::pair<CompensatedSum, std::size_t>> acc;
  for (const auto& s : per_item) {
    auto& [sum, n] = acc[s.name];
    sum.add(s.value);
    ++n;
  }
  std::map<std::string, double> out;
  for (const auto& [name, entry] : acc) {
    const double mean = entry.first.value() / static_cast<double>(entry.second);
    out[name] = round_half_even(mean * 100.0, 2);
  }
  return out;
}

}  // namespace agrimm::metrics
