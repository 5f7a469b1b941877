#include "agrimm/runtime/config.hpp"

#include "agrimm/common/error.hpp"
#include "agrimm/common/hash.hpp"
#include "agrimm/common/jsonl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>

extern char** environ;

namespace agrimm::runtime {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

class ValueParser {
 public:
  explicit ValueParser(std::string_view text) : s_(text) {}

  json parse_all() {
    json v = value();
    skip_space();
    if (pos_ != s_.size()) fail("trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw Error(Errc::ConfigError, "column " + std::to_string(pos_ + 1), why);
  }
  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  json value() {
    skip_space();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return string();
    if (c == '[') return array();
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return false;
    }
    return number();
  }

  json string() {
    std::string out;
    ++pos_;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("dangling escape");
        switch (s_[pos_++]) {
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          default: fail("unknown escape");
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  json array() {
    json out = json::array();
    ++pos_;
    skip_space();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return out;
    }
    for (;;) {
      out.push_back(value());
      skip_space();
      if (pos_ >= s_.size()) fail("unterminated array");
      if (s_[pos_] == ']') {
        ++pos_;
        return out;
      }
      if (s_[pos_] != ',') fail("expected ',' in array");
      ++pos_;
      skip_space();
      if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        return out;
      }
    }
  }

  json number() {
    const std::size_t start = pos_;
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
    bool is_float = false;
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '_') {
        ++pos_;
      } else if (c == '.' || c == 'e' || c == 'E' || ((c == '-' || c == '+') && is_float)) {
        is_float = true;
        ++pos_;
      } else {
        break;
      }
    }
    std::string digits;
    for (char c : s_.substr(start, pos_ - start)) {
      if (c != '_') digits.push_back(c);
    }
    if (digits.empty() || digits == "-" || digits == "+") fail("expected a value");
    try {
      std::size_t used = 0;
      if (is_float) {
        const double d = std::stod(digits, &used);
        if (used != digits.size()) fail("bad number");
        return d;
      }
      if (digits.front() == '-') {
        const long long v = std::stoll(digits, &used);
        if (used != digits.size()) fail("bad number");
        return v;
      }
      const unsigned long long v = std::stoull(digits, &used);
      if (used != digits.size()) fail("bad number");
      return v;
    } catch (const std::logic_error&) {
      fail("bad number '" + digits + "'");
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::size_t comment_start(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && in_string) {
      ++i;
    } else if (line[i] == '"') {
      in_string = !in_string;
    } else if (line[i] == '#' && !in_string) {
      return i;
    }
  }
  return line.size();
}

// Env and flag values may be written bare; anything that is not a valid
// literal is taken as a string.
json parse_loose(const std::string& text) {
  try {
    return ValueParser(text).parse_all();
  } catch (const Error&) {
    return text;
  }
}

struct Field {
  std::function<void(RunConfig&, const json&, const std::string&)> set;
};

[[noreturn]] void bad(const std::string& key, const std::string& why) { throw Error(Errc::ConfigError, key, why); }

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) bad(key, "expected a string");
  return v.get<std::string>();
}

double as_real(const json& v, const std::string& key) {
  if (!v.is_number()) bad(key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(key, "must be finite");
  return d;
}

std::int64_t as_int(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) {
    if (v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      bad(key, "integer too large");
    }
    return static_cast<std::int64_t>(v.get<std::uint64_t>());
  }
  if (!v.is_number_integer()) bad(key, "expected an integer");
  return v.get<std::int64_t>();
}

std::uint64_t as_u64(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const auto i = as_int(v, key);
  if (i < 0) bad(key, "must be non-negative");
  return static_cast<std::uint64_t>(i);
}

std::vector<std::string> as_strings(const json& v, const std::string& key) {
  if (!v.is_array()) bad(key, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(as_string(e, key));
  return out;
}

struct EmbeddingLists {
  std::vector<std::string> names;
  std::vector<std::string> models;
  std::vector<std::string> token_level;
};

// The embedding setters collect into `lists`; columns are assembled after
// all layers are applied.
std::map<std::string, Field> fields(EmbeddingLists& lists) {
  std::map<std::string, Field> table;
  auto str = [](std::string RunConfig::*m) {
    return Field{[m](RunConfig& c, const json& v, const std::string& k) { c.*m = as_string(v, k); }};
  };
  auto synth_str = [](std::string synthesis::SynthesisConfig::*m) {
    return Field{[m](RunConfig& c, const json& v, const std::string& k) { c.synth.*m = as_string(v, k); }};
  };
  auto synth_real = [](double synthesis::SynthesisConfig::*m) {
    return Field{[m](RunConfig& c, const json& v, const std::string& k) { c.synth.*m = as_real(v, k); }};
  };
  auto synth_int = [](int synthesis::SynthesisConfig::*m) {
    return Field{[m](RunConfig& c, const json& v, const std::string& k) {
      const auto i = as_int(v, k);
      if (i < 0 || i > std::numeric_limits<int>::max()) bad(k, "out of range");
      c.synth.*m = static_cast<int>(i);
    }};
  };
  auto synth_size = [](std::size_t synthesis::SynthesisConfig::*m) {
    return Field{[m](RunConfig& c, const json& v, const std::string& k) { c.synth.*m = as_u64(v, k); }};
  };

  table["endpoints.chat_url"] = str(&RunConfig::chat_url);
  table["endpoints.embed_url"] = str(&RunConfig::embed_url);
  table["endpoints.auth_env_var"] = str(&RunConfig::auth_env_var);
  table["endpoints.embed_auth_env_var"] = str(&RunConfig::embed_auth_env_var);
  table["models.caption"] = synth_str(&synthesis::SynthesisConfig::caption_model);
  table["models.knowledge"] = synth_str(&synthesis::SynthesisConfig::knowledge_model);
  table["models.qa"] = synth_str(&synthesis::SynthesisConfig::qa_model);
  table["models.judge"] = {[](RunConfig& c, const json& v, const std::string& k) { c.judge.model = as_string(v, k); }};
  table["temperatures.caption"] = synth_real(&synthesis::SynthesisConfig::caption_temperature);
  table["temperatures.knowledge"] = synth_real(&synthesis::SynthesisConfig::knowledge_temperature);
  table["temperatures.qa"] = synth_real(&synthesis::SynthesisConfig::qa_temperature);
  table["temperatures.judge"] = {
      [](RunConfig& c, const json& v, const std::string& k) { c.judge.temperature = as_real(v, k); }};
  table["max_tokens.caption"] = synth_int(&synthesis::SynthesisConfig::caption_max_tokens);
  table["max_tokens.knowledge"] = synth_int(&synthesis::SynthesisConfig::knowledge_max_tokens);
  table["max_tokens.qa"] = synth_int(&synthesis::SynthesisConfig::qa_max_tokens);
  table["max_tokens.judge"] = {[](RunConfig& c, const json& v, const std::string& k) {
    const auto i = as_int(v, k);
    if (i < 1 || i > std::numeric_limits<int>::max()) bad(k, "out of range");
    c.judge.max_tokens = static_cast<int>(i);
  }};
  table["runtime.concurrency"] = {[](RunConfig& c, const json& v, const std::string& k) {
    const auto i = as_int(v, k);
    if (i < 1) bad(k, "must be at least 1");
    c.concurrency = static_cast<std::size_t>(i);
    c.judge.concurrency = c.concurrency;
  }};
  table["runtime.retries"] = {[](RunConfig& c, const json& v, const std::string& k) {
    const auto i = as_int(v, k);
    if (i < 1 || i > 100) bad(k, "must be between 1 and 100");
    c.synth.max_retries = static_cast<int>(i);
    c.judge.max_retries = static_cast<int>(i);
  }};
  table["runtime.backoff_ms"] = {[](RunConfig& c, const json& v, const std::string& k) {
    const auto i = as_int(v, k);
    if (i < 0) bad(k, "must be non-negative");
    c.synth.backoff_base = std::chrono::milliseconds(i);
    c.judge.backoff_base = std::chrono::milliseconds(i);
  }};
  table["runtime.attach_image"] = {[](RunConfig& c, const json& v, const std::string& k) {
    if (!v.is_boolean()) bad(k, "expected true or false");
    c.synth.attach_image = v.get<bool>();
  }};
  table["split.ratio"] = {[](RunConfig& c, const json& v, const std::string& k) { c.split_ratio = as_real(v, k); }};
  table["split.seed"] = {[](RunConfig& c, const json& v, const std::string& k) { c.split_seed = as_u64(v, k); }};
  table["stage2.batch"] = synth_size(&synthesis::SynthesisConfig::stage2_batch);
  table["stage2.min_words"] = synth_size(&synthesis::SynthesisConfig::min_words);
  table["stage2.max_words"] = synth_size(&synthesis::SynthesisConfig::max_words);
  table["stage2.max_reretrievals"] = synth_int(&synthesis::SynthesisConfig::max_reretrievals);
  table["judge.normalization_mode"] = {[](RunConfig& c, const json& v, const std::string& k) {
    try {
      c.judge.normalization = judge::parse_normalization(as_string(v, k));
    } catch (const Error& e) {
      bad(k, e.what());
    }
  }};
  table["review.sample_rate"] = {
      [](RunConfig& c, const json& v, const std::string& k) { c.review_sample_rate = as_real(v, k); }};
  table["embedding.names"] = {[&lists](RunConfig&, const json& v, const std::string& k) { lists.names = as_strings(v, k); }};
  table["embedding.models"] = {
      [&lists](RunConfig&, const json& v, const std::string& k) { lists.models = as_strings(v, k); }};
  table["embedding.token_level"] = {
      [&lists](RunConfig&, const json& v, const std::string& k) { lists.token_level = as_strings(v, k); }};
  table["embedding.batch_size"] = {[](RunConfig& c, const json& v, const std::string& k) {
    const auto i = as_int(v, k);
    if (i < 1) bad(k, "must be at least 1");
    c.embed_batch = static_cast<std::size_t>(i);
  }};
  table["paths.workdir"] = str(&RunConfig::workdir);
  return table;
}

void validate(const RunConfig& c) {
  if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0)) bad("split.ratio", "must lie strictly between 0 and 1");
  if (c.synth.stage2_batch < 1) bad("stage2.batch", "must be at least 1");
  if (c.synth.min_words > c.synth.max_words) bad("stage2.min_words", "exceeds stage2.max_words");
  if (!(c.review_sample_rate > 0.0 && c.review_sample_rate <= 1.0)) bad("review.sample_rate", "must lie in (0, 1]");
  for (auto [k, t] : {std::pair{"temperatures.caption", c.synth.caption_temperature},
                      std::pair{"temperatures.knowledge", c.synth.knowledge_temperature},
                      std::pair{"temperatures.qa", c.synth.qa_temperature},
                      std::pair{"temperatures.judge", c.judge.temperature}}) {
    if (t < 0.0 || t > 2.0) bad(k, "must lie in [0, 2]");
  }
  if (c.workdir.empty()) bad("paths.workdir", "must not be empty");
}

std::string env_name(const std::string& dotted) {
  std::string out = "AGRIMM_";
  for (char c : dotted) out.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}

}  // namespace

std::map<std::string, json> parse_config_text(std::string_view text) {
  std::map<std::string, json> out;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    line = trim(line.substr(0, comment_start(line)));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(Errc::ConfigError, where, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw Error(Errc::ConfigError, where, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(Errc::ConfigError, where, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw Error(Errc::ConfigError, where, "empty key");
    const std::string dotted = section.empty() ? key : section + "." + key;
    try {
      if (!out.emplace(dotted, ValueParser(trim(line.substr(eq + 1))).parse_all()).second) {
        throw Error(Errc::ConfigError, where, "duplicate key " + dotted);
      }
    } catch (const Error& e) {
      if (e.detail() == where) throw;
      throw Error(Errc::ConfigError, where, dotted + ": " + e.what());
    }
  }
  return out;
}

RunConfig load_config(std::string_view file_text, const std::map<std::string, std::string>& env,
                      const Overrides& flags) {
  RunConfig cfg;
  EmbeddingLists lists;
  const auto table = fields(lists);

  std::map<std::string, json> layered = parse_config_text(file_text);
  for (const auto& [key, value] : layered) {
    if (!table.count(key)) bad(key, "unknown key");
  }
  for (const auto& [key, field] : table) {
    auto it = env.find(env_name(key));
    if (it != env.end()) layered[key] = parse_loose(it->second);
  }
  for (const auto& [key, value] : flags) {
    if (!table.count(key)) bad(key, "unknown key");
    layered[key] = parse_loose(value);
  }
  for (const auto& [key, value] : layered) table.at(key).set(cfg, value, key);

  if (lists.names.size() != lists.models.size()) bad("embedding.models", "needs one model per name");
  for (std::size_t i = 0; i < lists.names.size(); ++i) {
    const bool token = std::find(lists.token_level.begin(), lists.token_level.end(), lists.names[i]) !=
                       lists.token_level.end();
    cfg.embedding_columns.push_back({lists.names[i], lists.models[i], token});
  }
  for (const auto& t : lists.token_level) {
    if (std::find(lists.names.begin(), lists.names.end(), t) == lists.names.end()) {
      bad("embedding.token_level", "unknown column " + t);
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config_file(const std::string& path, const std::map<std::string, std::string>& env,
                           const Overrides& flags) {
  std::string text;
  if (!path.empty()) {
    try {
      text = read_text_file(path);
    } catch (const Error& e) {
      throw Error(Errc::ConfigError, path, e.what());
    }
  }
  return load_config(text, env, flags);
}

std::map<std::string, std::string> process_environment() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    std::string_view entry(*e);
    const auto eq = entry.find('=');
    if (eq != std::string_view::npos) env.emplace(entry.substr(0, eq), entry.substr(eq + 1));
  }
  return env;
}

json RunConfig::semantic_json() const {
  json columns = json::array();
  for (const auto& c : embedding_columns) {
    columns.push_back({{"name", c.name}, {"model", c.model}, {"token_level", c.token_level}});
  }
  return {
      {"models",
       {{"caption", synth.caption_model}, {"knowledge", synth.knowledge_model}, {"qa", synth.qa_model},
        {"judge", judge.model}}},
      {"temperatures",
       {{"caption", synth.caption_temperature}, {"knowledge", synth.knowledge_temperature},
        {"qa", synth.qa_temperature}, {"judge", judge.temperature}}},
      {"max_tokens",
       {{"caption", synth.caption_max_tokens}, {"knowledge", synth.knowledge_max_tokens},
        {"qa", synth.qa_max_tokens}, {"judge", judge.max_tokens}}},
      {"retries", synth.max_retries},
      {"attach_image", synth.attach_image},
      {"split", {{"ratio", split_ratio}, {"seed", split_seed}}},
      {"stage2",
       {{"batch", synth.stage2_batch}, {"min_words", synth.min_words}, {"max_words", synth.max_words},
        {"max_reretrievals", synth.max_reretrievals}}},
      {"judge", {{"normalization_mode", judge::to_string(judge.normalization)}}},
      {"review", {{"sample_rate", review_sample_rate}}},
      {"embedding", {{"columns", columns}}},
  };
}

json RunConfig::to_json() const {
  json j = semantic_json();
  j["endpoints"] = {{"chat_url", chat_url},
                    {"embed_url", embed_url},
                    {"auth_env_var", auth_env_var},
                    {"embed_auth_env_var", embed_auth_env_var}};
  j["runtime"] = {{"concurrency", concurrency},
                  {"retries", synth.max_retries},
                  {"backoff_ms", synth.backoff_base.count()},
                  {"attach_image", synth.attach_image}};
  j["embedding"]["batch_size"] = embed_batch;
  j["paths"] = {{"workdir", workdir}};
  j["config_hash"] = hash();
  return j;
}

std::string RunConfig::hash() const { return sha256_hex(semantic_json().dump()).substr(0, 16); }

}  // namespace agrimm::runtime
