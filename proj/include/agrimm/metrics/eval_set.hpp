#pragma once

#include "agrimm/metrics/embedding.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace agrimm::metrics {

/// One evaluation line. `reference` also accepts the key `ground_truth`.
struct EvalItem {
  std::string id;
  std::string question;
  std::string reference;
  std::string prediction;
};

/// Errc::ParseError with the line number on malformed lines, Errc::EmptyInput
/// for a file without items.
std::vector<EvalItem> read_eval_set(const std::filesystem::path& path);

/// An embedding column: a display name plus where its vectors come from.
struct EmbeddingColumn {
  std::string name;
  EmbeddingClient* client = nullptr;
  bool token_level = false;  // greedy token matching instead of sentence cosine
};

/// metric -> score (0-100, two decimals) for one dataset: BLEU-4 at corpus
/// level, ROUGE-2 and METEOR averaged per item, then each embedding column.
std::map<std::string, double> evaluate_metrics(const std::vector<EvalItem>& items,
                                               const std::vector<EmbeddingColumn>& columns = {},
                                               const EmbedConfig& embed_cfg = {});

}  // namespace agrimm::metrics
