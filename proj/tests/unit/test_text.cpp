#include "agrimm/common/error.hpp"
#include "agrimm/synthesis/json_extract.hpp"
#include "agrimm/synthesis/text_checks.hpp"

#include <gtest/gtest.h>

using namespace agrimm;
using namespace agrimm::synthesis;
using nlohmann::json;

namespace {

Errc code_of(std::string_view text) {
  try {
    extract_json(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for: " << text;
  return Errc::IoError;
}

// Bracket-stack scan that ignores strings: true when the span starting at
// the first opener ends, either by returning to depth zero or at a closer
// of the wrong type (a malformed span, which is a parse error rather than
// "no JSON").
bool has_balanced_span(std::string_view text) {
  const auto start = text.find_first_of("[{");
  if (start == std::string_view::npos) return false;
  std::string stack;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      stack += c == '[' ? ']' : '}';
    } else if (c == ']' || c == '}') {
      if (stack.back() != c) return true;
      stack.pop_back();
      if (stack.empty()) return true;
    }
  }
  return false;
}

}  // namespace

TEST(ExtractJson, FencedArray) { EXPECT_EQ(extract_json("```json\n[1,2]\n```"), json::array({1, 2})); }

TEST(ExtractJson, ProseWrappedObject) {
  EXPECT_EQ(extract_json("Here you go: {\"a\":1} thanks"), json({{"a", 1}}));
}

TEST(ExtractJson, UnbalancedIsNoJsonFound) {
  EXPECT_FALSE(has_balanced_span("[[1,2]"));
  EXPECT_EQ(code_of("[[1,2]"), Errc::NoJsonFound);
  EXPECT_EQ(code_of("no json here"), Errc::NoJsonFound);
  EXPECT_EQ(code_of(""), Errc::NoJsonFound);
}

TEST(ExtractJson, BracesInsideStrings) {
  EXPECT_EQ(extract_json(R"(x {"k": "a } b ] {"} y)"), json({{"k", "a } b ] {"}}));
  EXPECT_EQ(extract_json(R"({"k": "quote \" }"})"), json({{"k", "quote \" }"}}));
}

TEST(ExtractJson, FirstSpanWins) {
  EXPECT_EQ(extract_json("[1] and then {\"a\":2}"), json::array({1}));
}

TEST(ExtractJson, StrictInsideSpan) {
  EXPECT_EQ(code_of("{'a': 1}"), Errc::StrictParseError);
  EXPECT_EQ(code_of("[1, 2,]"), Errc::StrictParseError);
}

TEST(ExtractJson, FenceWithoutLanguageAndUnicode) {
  EXPECT_EQ(extract_json("```\n{\"état\": \"blé\"}\n```"), json({{"état", "blé"}}));
}

TEST(ExtractJson, AgreesWithDepthOracleOnGeneratedInputs) {
  const std::vector<std::string> pieces = {"[", "]", "{", "}", "1", ",", "\"x\"", ":", " ", "ab"};
  std::uint64_t state = 12345;
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text;
    const int len = 1 + static_cast<int>(state % 9);
    for (int i = 0; i < len; ++i) {
      state = state * 6364136223846793005ULL + 1442695040888963407ULL;
      text += pieces[(state >> 33) % pieces.size()];
    }
    bool found = true;
    try {
      extract_json(text);
    } catch (const Error& e) {
      found = e.code() != Errc::NoJsonFound;
    }
    EXPECT_EQ(found, has_balanced_span(text)) << text;
  }
}

TEST(Sentences, BasicSplit) {
  EXPECT_EQ(split_sentences("One. Two! Three? Four.").size(), 4u);
  EXPECT_EQ(split_sentences("").size(), 0u);
  EXPECT_EQ(split_sentences("No terminal punctuation").size(), 1u);
}

TEST(Sentences, AbbreviationsAndInitials) {
  EXPECT_EQ(split_sentences("Leaves of S. lycopersicum are lobed. Fruits are red.").size(), 2u);
  EXPECT_EQ(split_sentences("Cereals, e.g. wheat, cover the field. It is sunny.").size(), 2u);
  EXPECT_EQ(split_sentences("Several Solanum spp. grow here. Soil is dry.").size(), 2u);
}

TEST(Sentences, DecimalsDoNotSplit) {
  EXPECT_EQ(split_sentences("The plant is 1.5 m tall. It flowers.").size(), 2u);
}

TEST(WordCount, Whitespace) {
  EXPECT_EQ(word_count(""), 0u);
  EXPECT_EQ(word_count("  a  b\tc\nd "), 4u);
}

TEST(ContainsNumber, DigitRuns) {
  EXPECT_TRUE(contains_number("There are 61 wheat heads.", 61));
  EXPECT_FALSE(contains_number("about sixty", 61));
  EXPECT_FALSE(contains_number("610 heads", 61));
  EXPECT_FALSE(contains_number("6.1 heads", 61));
  EXPECT_TRUE(contains_number("count:61", 61));
  EXPECT_TRUE(contains_number("0 objects", 0));
}
