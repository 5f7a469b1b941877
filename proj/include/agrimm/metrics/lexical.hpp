#pragma once

#include "agrimm/metrics/porter.hpp"
#include "agrimm/metrics/tokenizer.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <span>
#include <string>
#include <vector>

namespace agrimm::metrics {

struct MetricScore {
  std::string name;
  double value = 0.0;  // in [0, 1]
  std::map<std::string, double> components;

  nlohmann::json to_json() const;
};

/// Corpus BLEU-4: clipped n-gram counts pooled over all pairs, uniform
/// weights, brevity penalty, no smoothing. Errc::LengthMismatch when the
/// lists differ in size or are empty.
MetricScore bleu4(std::span<const TokenSeq> candidates, std::span<const TokenSeq> references);

/// Bigram-overlap F1 (components precision, recall, f1).
MetricScore rouge2(const TokenSeq& candidate, const TokenSeq& reference);

/// METEOR with exact then stem matching, alpha 0.9, beta 3, gamma 0.5.
MetricScore meteor_lite(const TokenSeq& candidate, const TokenSeq& reference,
                        const Stemmer& stemmer = porter_stem);

}  // namespace agrimm::metrics
