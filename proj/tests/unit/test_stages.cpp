#include "agrimm/common/error.hpp"
#include "agrimm/review/knowledge.hpp"
#include "agrimm/synthesis/stages.hpp"

#include <gtest/gtest.h>

#include <mutex>

using namespace agrimm;
using namespace agrimm::synthesis;
using agrimm::corpus::Component;
using agrimm::corpus::ImageRecord;
using nlohmann::json;

namespace {

SynthesisConfig fast_cfg() {
  SynthesisConfig cfg;
  cfg.backoff_base = std::chrono::milliseconds(0);
  return cfg;
}

ImageRecord wheat_record(std::uint64_t count) {
  ImageRecord r;
  r.id = "gwhd_0001";
  r.class_label = "wheat head";
  r.component = Component::Counting;
  r.annotation_count = count;
  return r;
}

ImageRecord maize_record() {
  ImageRecord r;
  r.id = "pn_1";
  r.class_label = "Zea mays";
  return r;
}

std::string words(std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i ? " " : "") + std::string("word");
  return out;
}

ChatResponse reply(std::string content) { return {std::move(content), {}}; }

json qa_array(const std::string& quant_answer, std::size_t n = 5) {
  const std::vector<std::string> cats = {"Identification", "Visual Reasoning", "Condition & Health",
                                         "Cultivation Knowledge", "Quantification"};
  json arr = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    arr.push_back({{"question", "Q" + std::to_string(i) + "?"},
                   {"answer", i == 4 ? quant_answer : "A" + std::to_string(i) + "."},
                   {"category", cats[i]}});
  }
  return arr;
}

review::KnowledgeEntry approved(const std::string& label) {
  auto e = review::make_entry(label, review::KnowledgeKind::Species, words(200));
  e.state = review::EntryState::Approved;
  return e;
}

Caption caption_for(const ImageRecord& r) {
  Caption c;
  c.image_id = r.id;
  c.text = "One. Two. Three.";
  c.injected_label = r.class_label;
  return c;
}

const char* kFourSentences = "A maize field. Plants are tall. Leaves are green. The sky is clear.";

}  // namespace

TEST(Stage1, AcceptsFourSentences) {
  CallbackChatClient client([](const ChatRequest&) { return reply(kFourSentences); });
  const auto c = stage1_caption(maize_record(), client, fast_cfg(), [] { return std::string("T"); });
  EXPECT_EQ(c.text, kFourSentences);
  EXPECT_EQ(c.image_id, "pn_1");
  EXPECT_EQ(c.injected_label, "Zea mays");
  EXPECT_EQ(c.created_at, "T");
  EXPECT_EQ(client.calls(), 1u);
}

TEST(Stage1, PromptCarriesLabel) {
  std::string prompt;
  CallbackChatClient client([&](const ChatRequest& r) {
    prompt = r.messages.back().content;
    return reply(kFourSentences);
  });
  auto rec = maize_record();
  rec.class_label = "Solanum lycopersicum";
  stage1_caption(rec, client, fast_cfg());
  EXPECT_NE(prompt.find("the image contains Solanum lycopersicum."), std::string::npos);
}

TEST(Stage1, CountingPromptContainsCount) {
  std::string prompt;
  CallbackChatClient client([&](const ChatRequest& r) {
    prompt = r.messages.back().content;
    return reply(kFourSentences);
  });
  stage1_caption(wheat_record(61), client, fast_cfg());
  EXPECT_NE(prompt.find("61"), std::string::npos);
  EXPECT_EQ(caption_extra_details(wheat_record(61)), "wheat head (the image contains 61 wheat head)");
}

TEST(Stage1, OneSentenceExhaustsRetries) {
  CallbackChatClient client([](const ChatRequest&) { return reply("Just one sentence."); });
  try {
    stage1_caption(maize_record(), client, fast_cfg());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ValidationFailed);
    EXPECT_EQ(e.detail(), "sentence count");
    EXPECT_EQ(e.raw(), "Just one sentence.");
  }
  EXPECT_EQ(client.calls(), 3u);
}

TEST(Stage1, RetryRecoversAndRerandomizesTemperature) {
  std::vector<double> temps;
  CallbackChatClient client([&](const ChatRequest& r) {
    temps.push_back(r.temperature);
    return reply(temps.size() == 1 ? "Too short." : kFourSentences);
  });
  const auto c = stage1_caption(maize_record(), client, fast_cfg());
  EXPECT_EQ(c.attempts, 2);
  ASSERT_EQ(temps.size(), 2u);
  EXPECT_DOUBLE_EQ(temps[0], 0.2);
  EXPECT_NE(temps[1], temps[0]);
}

TEST(Stage1, EndpointErrorAfterRetries) {
  CallbackChatClient client([](const ChatRequest&) -> ChatResponse { throw Error(Errc::EndpointError, "u"); });
  try {
    stage1_caption(maize_record(), client, fast_cfg());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EndpointError);
  }
  EXPECT_EQ(client.calls(), 3u);
}

TEST(RetryTemperature, DeterministicAndBounded) {
  EXPECT_DOUBLE_EQ(retry_temperature(0.7, 0, "k", "s"), 0.7);
  for (int a = 1; a < 50; ++a) {
    const double t = retry_temperature(0.7, a, "k", "s");
    EXPECT_EQ(t, retry_temperature(0.7, a, "k", "s"));
    EXPECT_GE(t, 0.6 - 1e-12);
    EXPECT_LE(t, 1.0 + 1e-12);
  }
  EXPECT_GE(retry_temperature(0.0, 3, "k", "s"), 0.0);
}

TEST(Stage2, SingleClassBatch) {
  CallbackChatClient client([](const ChatRequest&) {
    return reply(json{{"Malus domestica", words(300)}}.dump());
  });
  const std::vector<std::string> batch{"Malus domestica"};
  const auto out = stage2_retrieve(batch, review::KnowledgeKind::Species, client, fast_cfg());
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].state, review::EntryState::Pending);
  EXPECT_EQ(out[0].class_label, "Malus domestica");
  EXPECT_EQ(client.calls(), 1u);
}

TEST(Stage2, OmittedClassIsMissingClass) {
  CallbackChatClient client([](const ChatRequest&) { return reply(json{{"A", words(200)}}.dump()); });
  const std::vector<std::string> batch{"A", "B"};
  try {
    stage2_retrieve(batch, review::KnowledgeKind::Species, client, fast_cfg());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingClass);
    EXPECT_EQ(e.detail(), "B");
  }
}

TEST(Stage2, ShortDescriptionIsReRequestedAlone) {
  std::mutex mu;
  std::vector<std::string> prompts;
  CallbackChatClient client([&](const ChatRequest& r) {
    std::lock_guard lock(mu);
    prompts.push_back(r.messages.back().content);
    if (prompts.size() == 1) return reply(json{{"A", words(200)}, {"B", words(80)}}.dump());
    return reply(json{{"B", words(250)}}.dump());
  });
  const std::vector<std::string> batch{"A", "B"};
  const auto out = stage2_retrieve(batch, review::KnowledgeKind::Species, client, fast_cfg());
  ASSERT_EQ(out.size(), 2u);
  ASSERT_EQ(prompts.size(), 2u);
  EXPECT_NE(prompts[1].find("[\"B\"]"), std::string::npos);
  EXPECT_EQ(prompts[1].find("\"A\""), std::string::npos);
  EXPECT_EQ(out[1].description, words(250));
}

TEST(Stage2, WordBoundsAreInclusive) {
  for (std::size_t n : {150u, 600u}) {
    CallbackChatClient client([n](const ChatRequest&) { return reply(json{{"A", words(n)}}.dump()); });
    const std::vector<std::string> batch{"A"};
    EXPECT_EQ(stage2_retrieve(batch, review::KnowledgeKind::Species, client, fast_cfg()).size(), 1u);
    EXPECT_EQ(client.calls(), 1u);
  }
}

TEST(Stage2, NonObjectIsJsonShapeErrorAfterRetries) {
  CallbackChatClient client([](const ChatRequest&) { return reply("[\"not a map\"]"); });
  const std::vector<std::string> batch{"A"};
  try {
    stage2_retrieve(batch, review::KnowledgeKind::Species, client, fast_cfg());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::JsonShapeError);
  }
}

TEST(Stage2, BatchLimitAndDiseasePrompt) {
  auto cfg = fast_cfg();
  cfg.stage2_batch = 2;
  CallbackChatClient client([](const ChatRequest&) { return reply("{}"); });
  const std::vector<std::string> three{"a", "b", "c"};
  EXPECT_THROW(stage2_retrieve(three, review::KnowledgeKind::Species, client, cfg), Error);
  const std::vector<std::string> one{"Tomato late blight"};
  const auto prompt = stage2_prompt(one, review::KnowledgeKind::Disease, {{"Tomato late blight", "fungal, not viral"}});
  EXPECT_NE(prompt.find("[\"Tomato late blight\"]"), std::string::npos);
  EXPECT_NE(prompt.find("fungal, not viral"), std::string::npos);
}

TEST(Stage2, CitationsAreKept) {
  CallbackChatClient client([](const ChatRequest&) {
    return ChatResponse{json{{"A", words(200)}}.dump(), {"https://src"}};
  });
  const std::vector<std::string> batch{"A"};
  const auto out = stage2_retrieve(batch, review::KnowledgeKind::Species, client, fast_cfg());
  EXPECT_EQ(out[0].source_citations, (std::vector<std::string>{"https://src"}));
}

TEST(Stage3, WellFormedArray) {
  CallbackChatClient client([](const ChatRequest&) { return reply("```json\n" + qa_array("Two.").dump() + "\n```"); });
  const auto rec = maize_record();
  const auto k = approved("Zea mays");
  const auto pairs = stage3_generate(rec, caption_for(rec), k, client, fast_cfg());
  ASSERT_EQ(pairs.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(pairs[i].category, kQACategories[i]);
    EXPECT_EQ(pairs[i].provenance.knowledge_hash, k.content_hash());
    EXPECT_EQ(pairs[i].image_id, "pn_1");
  }
}

TEST(Stage3, FourObjectsRejected) {
  try {
    parse_qa_response(qa_array("x", 4).dump(), maize_record());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ValidationFailed);
    EXPECT_EQ(e.detail(), "count=4");
  }
}

TEST(Stage3, DuplicateCategoryRejected) {
  auto arr = qa_array("x");
  arr[1]["category"] = "Identification";
  try {
    parse_qa_response(arr.dump(), maize_record());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.detail(), "category set");
  }
}

TEST(Stage3, CountGrounding) {
  EXPECT_EQ(parse_qa_response(qa_array("There are 61 wheat heads.").dump(), wheat_record(61)).size(), 5u);
  try {
    parse_qa_response(qa_array("about sixty").dump(), wheat_record(61));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ValidationFailed);
    EXPECT_EQ(e.detail(), "quantification count");
  }
  EXPECT_THROW(parse_qa_response(qa_array("There are 610 heads.").dump(), wheat_record(61)), Error);
}

TEST(Stage3, CountInjectedIntoClassInfo) {
  std::string prompt;
  CallbackChatClient client([&](const ChatRequest& r) {
    prompt = r.messages.back().content;
    return reply(qa_array("61 heads").dump());
  });
  const auto rec = wheat_record(61);
  stage3_generate(rec, caption_for(rec), approved("wheat head"), client, fast_cfg());
  EXPECT_NE(prompt.find("the image contains 61 wheat head."), std::string::npos);
}

TEST(Stage3, PendingKnowledgeRefused) {
  CallbackChatClient client([](const ChatRequest&) { return reply(qa_array("x").dump()); });
  const auto rec = maize_record();
  auto k = approved("Zea mays");
  k.state = review::EntryState::Pending;
  try {
    stage3_generate(rec, caption_for(rec), k, client, fast_cfg());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::StateError);
  }
  EXPECT_EQ(client.calls(), 0u);
}

TEST(Stage3, EditedTextFeedsPrompt) {
  std::string prompt;
  CallbackChatClient client([&](const ChatRequest& r) {
    prompt = r.messages.back().content;
    return reply(qa_array("x").dump());
  });
  const auto rec = maize_record();
  auto k = approved("Zea mays");
  k.state = review::EntryState::Edited;
  k.edited_text = "Corrected maize description.";
  stage3_generate(rec, caption_for(rec), k, client, fast_cfg());
  EXPECT_NE(prompt.find("Corrected maize description."), std::string::npos);
}

TEST(Stage3, RetriesThenValidationFailed) {
  CallbackChatClient client([](const ChatRequest&) { return reply("no json"); });
  const auto rec = maize_record();
  EXPECT_THROW(stage3_generate(rec, caption_for(rec), approved("Zea mays"), client, fast_cfg()), Error);
  EXPECT_EQ(client.calls(), 3u);
}

TEST(QACategoryNames, Aliases) {
  EXPECT_EQ(parse_qa_category("Condition & Health"), QACategory::HealthCondition);
  EXPECT_EQ(parse_qa_category("Anatomy/Detail"), QACategory::Quantification);
  EXPECT_EQ(parse_qa_category("visual_reasoning"), QACategory::VisualReasoning);
  EXPECT_FALSE(parse_qa_category("Weather").has_value());
}

TEST(Records, CaptionAndQaJsonRoundTrip) {
  Caption c = caption_for(maize_record());
  c.model_id = "m";
  c.created_at = "2025-01-01T00:00:00Z";
  EXPECT_EQ(Caption::from_json(c.to_json()).to_json(), c.to_json());
  QAPair q{"id", "q?", "a.", QACategory::Quantification, {"c", "k", "p"}};
  EXPECT_EQ(QAPair::from_json(q.to_json()).to_json(), q.to_json());
}
