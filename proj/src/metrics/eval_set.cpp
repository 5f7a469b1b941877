#include "agrimm/metrics/eval_set.hpp"

#include "agrimm/common/error.hpp"
#include "agrimm/common/jsonl.hpp"
#include "agrimm/metrics/aggregate.hpp"

namespace agrimm::metrics {

std::vector<EvalItem> read_eval_set(const std::filesystem::path& path) {
  std::vector<EvalItem> items;
  for_each_jsonl(path, [&](const json& v, std::size_t line_no) {
    try {
      EvalItem item;
      item.id = v.at("id").is_string() ? v.at("id").get<std::string>() : v.at("id").dump();
      item.question = v.value("question", "");
      item.reference = v.contains("reference") ? v.at("reference").get<std::string>()
                                               : v.at("ground_truth").get<std::string>();
      item.prediction = v.at("prediction").get<std::string>();
      items.push_back(std::move(item));
    } catch (const json::exception& e) {
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(line_no), e.what());
    }
  });
  if (items.empty()) throw Error(Errc::EmptyInput, path.string(), "evaluation set has no items");
  return items;
}

std::map<std::string, double> evaluate_metrics(const std::vector<EvalItem>& items,
                                               const std::vector<EmbeddingColumn>& columns,
                                               const EmbedConfig& embed_cfg) {
  if (items.empty()) throw Error(Errc::EmptyInput, "items", "evaluation set has no items");
  std::vector<TokenSeq> cands;
  std::vector<TokenSeq> refs;
  std::vector<std::string> cand_text;
  std::vector<std::string> ref_text;
  for (const auto& item : items) {
    cands.push_back(tokenize(item.prediction));
    refs.push_back(tokenize(item.reference));
    cand_text.push_back(item.prediction);
    ref_text.push_back(item.reference);
  }

  std::vector<MetricScore> scores;
  auto corpus_bleu = bleu4(cands, refs);
  corpus_bleu.name = "BLEU-4";
  scores.push_back(corpus_bleu);
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto r = rouge2(cands[i], refs[i]);
    r.name = "ROUGE-2";
    scores.push_back(std::move(r));
    auto m = meteor_lite(cands[i], refs[i]);
    m.name = "METEOR";
    scores.push_back(std::move(m));
  }
  for (const auto& col : columns) {
    if (col.client == nullptr) throw Error(Errc::ConfigError, col.name, "embedding column without a client");
    auto per_item = col.token_level ? embedding_greedy_f1(col.name, cands, refs, *col.client, embed_cfg)
                                    : embedding_cosine(col.name, cand_text, ref_text, *col.client, embed_cfg);
    scores.insert(scores.end(), per_item.begin(), per_item.end());
  }
  return corpus_aggregate(scores);
}

}  // namespace agrimm::metrics
