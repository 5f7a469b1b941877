#include "agrimm/judge/judge.hpp"

#include "agrimm/common/error.hpp"
#include "agrimm/common/numeric.hpp"
#include "agrimm/synthesis/json_extract.hpp"
#include "agrimm/synthesis/prompts.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace agrimm::judge {

using nlohmann::json;

std::string_view to_string(Normalization n) { return n == Normalization::Affine ? "affine" : "ratio"; }

Normalization parse_normalization(std::string_view text) {
  if (text == "affine" || text == "mean_minus_one") return Normalization::Affine;
  if (text == "ratio" || text == "mean_over_four") return Normalization::Ratio;
  throw Error(Errc::ConfigError, std::string(text), "normalization must be 'affine' or 'ratio'");
}

json JudgeVerdict::to_json() const {
  return {{"item_id", item_id},
          {"score", score},
          {"justification", justification},
          {"raw_response", raw_response},
          {"attempts", attempts}};
}

std::string build_judge_prompt(std::string_view question, std::string_view ground_truth,
                               std::string_view model_output) {
  for (const auto& [name, value] : {std::pair{"question", question}, std::pair{"ground_truth", ground_truth},
                                    std::pair{"model_output", model_output}}) {
    if (value.empty()) throw Error(Errc::EmptyField, name, "judge prompt field is empty");
  }
  return synthesis::render_prompt(synthesis::builtin_template(synthesis::PromptName::Judge),
                                  {{"question", std::string(question)},
                                   {"ground_truth", std::string(ground_truth)},
                                   {"model_output", std::string(model_output)}});
}

ParsedVerdict parse_verdict(std::string_view raw) {
  const json value = synthesis::extract_json(raw);
  if (!value.is_object()) throw Error(Errc::JsonShapeError, value.type_name(), "verdict must be a JSON object");
  auto it = value.find("score");
  if (it == value.end()) throw Error(Errc::ScoreOutOfRange, "missing", "verdict has no score");
  if (!it->is_number_integer()) throw Error(Errc::ScoreOutOfRange, it->dump(), "score must be an integer 1-4");
  const auto score = it->get<std::int64_t>();
  if (score < 1 || score > 4) throw Error(Errc::ScoreOutOfRange, std::to_string(score), "score must be 1-4");
  auto just = value.find("justification");
  if (just == value.end() || !just->is_string() ||
      std::all_of(just->get_ref<const std::string&>().begin(), just->get_ref<const std::string&>().end(),
                  [](unsigned char c) { return std::isspace(c) != 0; })) {
    throw Error(Errc::MissingJustification, "", "verdict has no justification");
  }
  return {static_cast<int>(score), just->get<std::string>()};
}

double normalize_scores(std::span<const int> scores, Normalization mode) {
  if (scores.empty()) throw Error(Errc::EmptyInput, "scores", "no scores to normalize");
  CompensatedSum sum;
  for (int s : scores) {
    if (s < 1 || s > 4) throw Error(Errc::OutOfRange, std::to_string(s), "score outside 1-4");
    sum.add(s);
  }
  const double mean = sum.value() / static_cast<double>(scores.size());
  const double pct = mode == Normalization::Affine ? (mean - 1.0) / 3.0 * 100.0 : mean / 4.0 * 100.0;
  return round_half_even(pct, 2);
}

json JudgeReport::to_json() const {
  json items_json = json::array();
  for (const auto& item : items) {
    if (item.verdict) {
      items_json.push_back(item.verdict->to_json());
    } else {
      items_json.push_back({{"item_id", item.item_id}, {"failure", item.failure}, {"attempts", item.attempts}});
    }
  }
  json out = {{"items", items_json},
              {"mean_score", mean_score ? json(*mean_score) : json(nullptr)},
              {"normalized_pct", normalized_pct ? json(*normalized_pct) : json(nullptr)},
              {"normalization", to_string(normalization)},
              {"failure_count", failure_count},
              {"config_hash", config_hash}};
  if (no_valid_verdicts) out["flags"] = json::array({"NoValidVerdicts"});
  return out;
}

JudgeReport judge_run(const std::vector<metrics::EvalItem>& items, synthesis::ChatClient& client,
                      const JudgeConfig& cfg, std::string config_hash) {
  if (items.empty()) throw Error(Errc::EmptyInput, "eval_set", "nothing to judge");
  JudgeReport report;
  report.normalization = cfg.normalization;
  report.config_hash = std::move(config_hash);
  report.items.resize(items.size());
  std::vector<bool> endpoint_only(items.size(), false);

  auto judge_one = [&](std::size_t i) {
    const auto& item = items[i];
    auto& result = report.items[i];
    result.item_id = item.id;
    synthesis::ChatRequest request;
    request.model = cfg.model;
    request.temperature = cfg.temperature;
    request.max_tokens = cfg.max_tokens;
    try {
      request.messages.push_back({"user", build_judge_prompt(item.question, item.reference, item.prediction)});
    } catch (const Error& e) {
      result.failure = e.what();
      return;
    }
    bool saw_response = false;
    const int attempts = std::max(1, cfg.max_retries);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
      result.attempts = attempt;
      std::string raw;
      try {
        raw = client.complete(request).content;
        saw_response = true;
        const auto parsed = parse_verdict(raw);
        result.verdict = JudgeVerdict{item.id, parsed.score, parsed.justification, raw, attempt};
        return;
      } catch (const Error& e) {
        result.failure = e.what();
        if (e.code() == Errc::EndpointError && attempt < attempts) {
          std::this_thread::sleep_for(cfg.backoff_base * (1 << (attempt - 1)));
        }
      }
    }
    endpoint_only[i] = !saw_response;
  };

  const std::size_t width = std::clamp<std::size_t>(cfg.concurrency, 1, items.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < items.size();) {
      try {
        judge_one(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < width; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<int> scores;
  for (const auto& r : report.items) {
    if (r.verdict) {
      scores.push_back(r.verdict->score);
    } else {
      ++report.failure_count;
    }
  }
  if (std::all_of(endpoint_only.begin(), endpoint_only.end(), [](bool b) { return b; })) {
    throw Error(Errc::EndpointError, "judge", "every item failed at the endpoint: " + report.items.front().failure);
  }
  if (scores.empty()) {
    report.no_valid_verdicts = true;
    return report;
  }
  CompensatedSum sum;
  for (int s : scores) sum.add(s);
  report.mean_score = sum.value() / static_cast<double>(scores.size());
  report.normalized_pct = normalize_scores(scores, cfg.normalization);
  return report;
}

}  // namespace agrimm::judge
