#include "agrimm/metrics/lexical.hpp"

#include "agrimm/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace agrimm::metrics {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

std::size_t clipped_overlap(const NgramCounts& cand, const NgramCounts& ref) {
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

nlohmann::json MetricScore::to_json() const {
  return {{"name", name}, {"value", value}, {"components", components}};
}

MetricScore bleu4(std::span<const TokenSeq> candidates, std::span<const TokenSeq> references) {
  if (candidates.size() != references.size() || candidates.empty()) {
    throw Error(Errc::LengthMismatch,
                std::to_string(candidates.size()) + " vs " + std::to_string(references.size()),
                "bleu4 needs one reference per candidate");
  }
  std::size_t matched[4] = {0, 0, 0, 0};
  std::size_t total[4] = {0, 0, 0, 0};
  std::size_t c = 0;
  std::size_t r = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i].tokens;
    const auto& ref = references[i].tokens;
    c += cand.size();
    r += ref.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      matched[n - 1] += clipped_overlap(ngrams(cand, n), ngrams(ref, n));
      total[n - 1] += cand.size() >= n ? cand.size() - n + 1 : 0;
    }
  }

  MetricScore score{"bleu4", 0.0, {}};
  double log_sum = 0.0;
  bool any_zero = false;
  for (std::size_t n = 0; n < 4; ++n) {
    const double p = total[n] == 0 ? 0.0 : static_cast<double>(matched[n]) / static_cast<double>(total[n]);
    score.components["p" + std::to_string(n + 1)] = p;
    if (p == 0.0) {
      any_zero = true;
    } else {
      log_sum += std::log(p);
    }
  }
  const double bp = c == 0 ? 0.0 : (c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0);
  score.components["brevity_penalty"] = bp;
  score.components["candidate_length"] = static_cast<double>(c);
  score.components["reference_length"] = static_cast<double>(r);
  score.value = any_zero ? 0.0 : std::clamp(bp * std::exp(log_sum / 4.0), 0.0, 1.0);
  return score;
}

MetricScore rouge2(const TokenSeq& candidate, const TokenSeq& reference) {
  const auto cand = ngrams(candidate.tokens, 2);
  const auto ref = ngrams(reference.tokens, 2);
  const std::size_t cand_total = candidate.tokens.size() >= 2 ? candidate.tokens.size() - 1 : 0;
  const std::size_t ref_total = reference.tokens.size() >= 2 ? reference.tokens.size() - 1 : 0;
  MetricScore score{"rouge2", 0.0, {{"precision", 0.0}, {"recall", 0.0}, {"f1", 0.0}}};
  if (cand_total == 0 || ref_total == 0) return score;
  const double overlap = static_cast<double>(clipped_overlap(cand, ref));
  const double p = overlap / static_cast<double>(cand_total);
  const double r = overlap / static_cast<double>(ref_total);
  score.components = {{"precision", p}, {"recall", r}, {"f1", f1(p, r)}};
  score.value = score.components["f1"];
  return score;
}

MetricScore meteor_lite(const TokenSeq& candidate, const TokenSeq& reference, const Stemmer& stemmer) {
  const auto& cand = candidate.tokens;
  const auto& ref = reference.tokens;
  std::vector<std::ptrdiff_t> align(cand.size(), -1);  // candidate index -> reference index
  std::vector<bool> ref_used(ref.size(), false);

  auto match_stage = [&](const std::vector<std::string>& c_keys, const std::vector<std::string>& r_keys) {
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (align[i] >= 0) continue;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (!ref_used[j] && c_keys[i] == r_keys[j]) {
          align[i] = static_cast<std::ptrdiff_t>(j);
          ref_used[j] = true;
          break;
        }
      }
    }
  };
  match_stage(cand, ref);
  std::vector<std::string> cand_stems;
  std::vector<std::string> ref_stems;
  for (const auto& t : cand) cand_stems.push_back(stemmer(t));
  for (const auto& t : ref) ref_stems.push_back(stemmer(t));
  match_stage(cand_stems, ref_stems);

  std::size_t m = 0;
  std::size_t chunks = 0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (align[i] < 0) continue;
    ++m;
    const bool continues = i > 0 && align[i - 1] >= 0 && align[i] == align[i - 1] + 1;
    if (!continues) ++chunks;
  }

  MetricScore score{"meteor", 0.0, {}};
  score.components["matches"] = static_cast<double>(m);
  score.components["chunks"] = static_cast<double>(chunks);
  if (m == 0) {
    score.components["precision"] = 0.0;
    score.components["recall"] = 0.0;
    score.components["fmean"] = 0.0;
    score.components["fragmentation_penalty"] = 0.0;
    return score;
  }
  const double p = static_cast<double>(m) / static_cast<double>(cand.size());
  const double r = static_cast<double>(m) / static_cast<double>(ref.size());
  const double fmean = p * r / (0.9 * p + 0.1 * r);
  const double frag = static_cast<double>(chunks) / static_cast<double>(m);
  const double penalty = 0.5 * frag * frag * frag;
  score.components["precision"] = p;
  score.components["recall"] = r;
  score.components["fmean"] = fmean;
  score.components["fragmentation_penalty"] = penalty;
  score.value = std::clamp(fmean * (1.0 - penalty), 0.0, 1.0);
  return score;
}

}  // namespace agrimm::metrics
