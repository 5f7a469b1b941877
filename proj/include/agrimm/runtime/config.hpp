#pragma once

#include "agrimm/judge/judge.hpp"
#include "agrimm/synthesis/stages.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace agrimm::runtime {

struct EmbeddingColumnConfig {
  std::string name;
  std::string model;
  bool token_level = false;
};

struct RunConfig {
  std::string chat_url = "http://localhost:8000/v1/chat/completions";
  std::string embed_url = "http://localhost:8001/v1/embeddings";
  std::string auth_env_var = "CHAT_API_KEY";
  std::string embed_auth_env_var = "EMBED_API_KEY";

  synthesis::SynthesisConfig synth;
  judge::JudgeConfig judge;
  std::size_t concurrency = 4;
  double split_ratio = 0.8;
  std::uint64_t split_seed = 42;
  double review_sample_rate = 1.0;
  std::vector<EmbeddingColumnConfig> embedding_columns;
  std::size_t embed_batch = 100;
  std::string workdir = "work";

  /// Every field, grouped by file section.
  nlohmann::json to_json() const;
  /// Fields that change artifact content (models, sampling, retries, split,
  /// Stage II limits, judge mapping). Endpoints, secrets, paths and
  /// concurrency are excluded.
  nlohmann::json semantic_json() const;
  /// First 16 hex digits of SHA-256 over the canonical semantic JSON.
  std::string hash() const;
};

/// Section-qualified key ("split.seed") to raw value text.
using Overrides = std::map<std::string, std::string>;

/// Parses the config file grammar (see README) into "section.key" -> value.
/// Errc::ConfigError(line) on malformed input.
std::map<std::string, nlohmann::json> parse_config_text(std::string_view text);

/// Layers flags > env > file > defaults. `env` holds the process environment
/// (only AGRIMM_<SECTION>_<KEY> entries are consulted). Errc::ConfigError
/// (field, reason) for unknown keys, wrong types and broken invariants.
RunConfig load_config(std::string_view file_text, const std::map<std::string, std::string>& env,
                      const Overrides& flags);

/// Reads `path` when non-empty, otherwise starts from an empty file.
RunConfig load_config_file(const std::string& path, const std::map<std::string, std::string>& env,
                           const Overrides& flags);

/// Snapshot of the current process environment.
std::map<std::string, std::string> process_environment();

}  // namespace agrimm::runtime
