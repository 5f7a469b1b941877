#include "agrimm/common/error.hpp"
#include "agrimm/common/jsonl.hpp"
#include "agrimm/judge/judge.hpp"
#include "judge_cases.hpp"

#include <gtest/gtest.h>

#include <regex>

using namespace agrimm;
using namespace agrimm::judge;
using agrimm::metrics::EvalItem;
using agrimm::synthesis::CallbackChatClient;
using agrimm::synthesis::ChatRequest;
using agrimm::synthesis::ChatResponse;
using nlohmann::json;

namespace {

std::vector<EvalItem> items(std::size_t n) {
  std::vector<EvalItem> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"item" + std::to_string(i), "question " + std::to_string(i), "truth " + std::to_string(i),
                   "output " + std::to_string(i)});
  }
  return out;
}

JudgeConfig fast() {
  JudgeConfig cfg;
  cfg.backoff_base = std::chrono::milliseconds(0);
  return cfg;
}

// Scores keyed on the question embedded in the prompt so results do not
// depend on which worker handles which item.
CallbackChatClient scripted(std::vector<int> scores) {
  return CallbackChatClient([scores](const ChatRequest& r) {
    static const std::regex q("question (\\d+)");
    std::smatch m;
    const std::string& prompt = r.messages.back().content;
    std::regex_search(prompt, m, q);
    const int s = scores.at(std::stoul(m[1].str()));
    return ChatResponse{json{{"score", s}, {"justification", "because"}}.dump(), {}};
  });
}

}  // namespace

TEST(JudgePrompt, ContainsFieldsAndRejectsEmpty) {
  const auto p = build_judge_prompt("What crop?", "Maize.", "Corn.");
  EXPECT_NE(p.find("What crop?"), std::string::npos);
  EXPECT_NE(p.find("Maize."), std::string::npos);
  EXPECT_NE(p.find("Corn."), std::string::npos);
  try {
    build_judge_prompt("q", "", "m");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyField);
    EXPECT_EQ(e.detail(), "ground_truth");
  }
}

TEST(JudgePrompt, MatchesStoredFixtureOutsidePlaceholders) {
  auto fixture = read_text_file(std::filesystem::path(AGRIMM_FIXTURES) / "prompts" / "judge.txt");
  if (!fixture.empty() && fixture.back() == '\n') fixture.pop_back();
  std::string expected = fixture;
  for (const auto& [slot, value] : std::vector<std::pair<std::string, std::string>>{
           {"{question}", "Q?"}, {"{ground_truth}", "G."}, {"{model_output}", "M."}}) {
    const auto at = expected.find(slot);
    ASSERT_NE(at, std::string::npos);
    expected.replace(at, slot.size(), value);
  }
  EXPECT_EQ(build_judge_prompt("Q?", "G.", "M."), expected);
}

TEST(ParseVerdict, RobustnessSuite) {
  for (const auto& c : judge_cases::robustness_suite()) {
    if (c.score) {
      EXPECT_EQ(parse_verdict(c.raw).score, *c.score) << c.raw;
      continue;
    }
    try {
      parse_verdict(c.raw);
      ADD_FAILURE() << "accepted: " << c.raw;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), c.error) << c.raw << " -> " << e.what();
    }
  }
}

TEST(ParseVerdict, RoundTrip) {
  for (int s = 1; s <= 4; ++s) {
    for (const std::string just : {"plain", "with \"quotes\" and {braces}", "unicode é ✓", "line\nbreak"}) {
      const auto parsed = parse_verdict(json{{"score", s}, {"justification", just}}.dump());
      EXPECT_EQ(parsed.score, s);
      EXPECT_EQ(parsed.justification, just);
    }
  }
}

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize_scores(std::vector<int>{4, 4, 3}), 88.89);
  EXPECT_EQ(normalize_scores(std::vector<int>{4, 4, 4}), 100.0);
  EXPECT_EQ(normalize_scores(std::vector<int>{1, 1}), 0.0);
  EXPECT_EQ(normalize_scores(std::vector<int>{3, 3, 3, 4}), 75.0);
  EXPECT_EQ(normalize_scores(std::vector<int>{4, 4, 3}, Normalization::Ratio), 91.67);
  EXPECT_THROW(normalize_scores(std::vector<int>{}), Error);
  EXPECT_THROW(normalize_scores(std::vector<int>{0, 4}), Error);
}

TEST(Normalize, MonotoneAndBounded) {
  std::uint64_t state = 99;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> s(1 + trial % 9);
    for (auto& v : s) {
      state = state * 6364136223846793005ULL + 1;
      v = 1 + static_cast<int>((state >> 40) % 4);
    }
    const double base = normalize_scores(s);
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, 100.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == 4) continue;
      auto up = s;
      ++up[i];
      EXPECT_GE(normalize_scores(up), base);
    }
  }
}

TEST(JudgeRun, MockScores) {
  auto client = scripted({4, 4, 3});
  const auto report = judge_run(items(3), client, fast(), "abc");
  ASSERT_TRUE(report.mean_score.has_value());
  EXPECT_NEAR(*report.mean_score, 11.0 / 3.0, 1e-12);
  EXPECT_EQ(report.normalized_pct, 88.89);
  EXPECT_EQ(report.failure_count, 0u);
  ASSERT_EQ(report.items.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(report.items[i].item_id, "item" + std::to_string(i));
}

TEST(JudgeRun, AllScoresOne) {
  auto client = scripted({1, 1, 1, 1});
  EXPECT_EQ(judge_run(items(4), client, fast()).normalized_pct, 0.0);
}

TEST(JudgeRun, AlwaysInvalid) {
  CallbackChatClient client([](const ChatRequest&) { return ChatResponse{"not json at all", {}}; });
  const auto report = judge_run(items(3), client, fast());
  EXPECT_EQ(report.failure_count, 3u);
  EXPECT_TRUE(report.no_valid_verdicts);
  EXPECT_FALSE(report.normalized_pct.has_value());
  EXPECT_EQ(client.calls(), 9u);
  const auto j = report.to_json();
  EXPECT_TRUE(j.at("normalized_pct").is_null());
}

TEST(JudgeRun, RetryOnParseFailure) {
  std::atomic<int> n{0};
  CallbackChatClient client([&](const ChatRequest&) {
    return ChatResponse{n++ == 0 ? "{\"score\": 9, \"justification\": \"x\"}" : "{\"score\": 2, \"justification\": \"x\"}", {}};
  });
  auto cfg = fast();
  cfg.concurrency = 1;
  const auto report = judge_run(items(1), client, cfg);
  ASSERT_TRUE(report.items[0].verdict.has_value());
  EXPECT_EQ(report.items[0].verdict->attempts, 2);
  EXPECT_EQ(report.normalized_pct, 33.33);
}

TEST(JudgeRun, FailuresExcludedFromMean) {
  CallbackChatClient client([](const ChatRequest& r) {
    if (r.messages.back().content.find("question 1") != std::string::npos) return ChatResponse{"nope", {}};
    return ChatResponse{"{\"score\": 4, \"justification\": \"good\"}", {}};
  });
  const auto report = judge_run(items(3), client, fast());
  EXPECT_EQ(report.failure_count, 1u);
  EXPECT_EQ(report.normalized_pct, 100.0);
  EXPECT_FALSE(report.items[1].verdict.has_value());
}

TEST(JudgeRun, EndpointFailureEverywhereIsFatal) {
  CallbackChatClient client([](const ChatRequest&) -> ChatResponse { throw Error(Errc::EndpointError, "down"); });
  try {
    judge_run(items(2), client, fast());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EndpointError);
  }
}

TEST(JudgeRun, ReproducibleBytes) {
  auto a = scripted({4, 2, 3, 1, 4});
  auto b = scripted({4, 2, 3, 1, 4});
  EXPECT_EQ(judge_run(items(5), a, fast(), "h").to_json().dump(), judge_run(items(5), b, fast(), "h").to_json().dump());
}

TEST(JudgeRun, RequestUsesConfiguredModel) {
  std::string model;
  double temperature = -1;
  CallbackChatClient client([&](const ChatRequest& r) {
    model = r.model;
    temperature = r.temperature;
    return ChatResponse{"{\"score\": 4, \"justification\": \"good\"}", {}};
  });
  auto cfg = fast();
  cfg.concurrency = 1;
  judge_run(items(1), client, cfg);
  EXPECT_EQ(model, "qwen3-30b-a3b-instruct");
  EXPECT_EQ(temperature, 0.0);
}

TEST(Normalization, Parse) {
  EXPECT_EQ(parse_normalization("ratio"), Normalization::Ratio);
  EXPECT_EQ(parse_normalization("affine"), Normalization::Affine);
  EXPECT_THROW(parse_normalization("log"), Error);
}
