#pragma once

#include "agrimm/metrics/eval_set.hpp"
#include "agrimm/synthesis/chat_client.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace agrimm::judge {

enum class Normalization {
  Affine,  // (mean - 1) / 3 * 100, so 1 maps to 0 and 4 to 100
  Ratio    // mean / 4 * 100
};
std::string_view to_string(Normalization n);
Normalization parse_normalization(std::string_view text);

struct JudgeConfig {
  std::string model = "qwen3-30b-a3b-instruct";
  double temperature = 0.0;
  int max_tokens = 512;
  int max_retries = 3;  // total attempts per item
  std::chrono::milliseconds backoff_base{500};
  std::size_t concurrency = 4;
  Normalization normalization = Normalization::Affine;
};

struct JudgeVerdict {
  std::string item_id;
  int score = 0;
  std::string justification;
  std::string raw_response;
  int attempts = 1;

  nlohmann::json to_json() const;
};

/// Stock judge rubric with the three fields substituted.
/// Errc::EmptyField(name) when any of them is empty.
std::string build_judge_prompt(std::string_view question, std::string_view ground_truth,
                               std::string_view model_output);

struct ParsedVerdict {
  int score = 0;
  std::string justification;
};

/// Errc::NoJsonFound / Errc::StrictParseError from extraction,
/// Errc::JsonShapeError for a non-object, Errc::ScoreOutOfRange(value) for a
/// missing, non-integer or out-of-scale score, Errc::MissingJustification.
ParsedVerdict parse_verdict(std::string_view raw);

/// Rounded half-even to two decimals. Errc::EmptyInput, Errc::OutOfRange.
double normalize_scores(std::span<const int> scores, Normalization mode = Normalization::Affine);

struct JudgeItemResult {
  std::string item_id;
  std::optional<JudgeVerdict> verdict;
  std::string failure;  // last error when verdict is empty
  int attempts = 0;
};

struct JudgeReport {
  std::vector<JudgeItemResult> items;  // input order
  std::optional<double> mean_score;    // over successful items only
  std::optional<double> normalized_pct;
  std::size_t failure_count = 0;
  bool no_valid_verdicts = false;
  Normalization normalization = Normalization::Affine;
  std::string config_hash;

  nlohmann::json to_json() const;
};

/// One request per item at the configured temperature, retrying endpoint and
/// parse failures. Items that exhaust retries are counted and excluded from
/// the mean. Errc::EndpointError only when every item failed at the
/// endpoint; parse-only failures yield a report with no_valid_verdicts.
JudgeReport judge_run(const std::vector<metrics::EvalItem>& items, synthesis::ChatClient& client,
                      const JudgeConfig& cfg, std::string config_hash = {});

}  // namespace agrimm::judge
