#pragma once

#include "agrimm/metrics/lexical.hpp"

#include <atomic>
#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace agrimm::metrics {

using Vector = std::vector<double>;
/// Row-major |candidate| x |reference| similarity matrix.
using SimMatrix = std::vector<std::vector<double>>;

/// BERTScore-style greedy matching over a token similarity matrix.
/// Errc::EmptyMatrix for an empty or ragged matrix.
MetricScore greedy_match_f1(const SimMatrix& sim);

/// Clamped to [-1, 1]. Errc::DimensionMismatch, Errc::ZeroVector.
double cosine(std::span<const double> u, std::span<const double> v);

/// One request's worth of texts in, one vector per text out.
class EmbeddingClient {
 public:
  virtual ~EmbeddingClient() = default;
  /// Throws Errc::EndpointError.
  virtual std::vector<Vector> embed_batch(const std::vector<std::string>& texts) = 0;
};

struct EmbeddingEndpoint {
  std::string url;  // e.g. http://localhost:8001/v1/embeddings
  std::string model;
  std::optional<std::string> bearer_token;
  std::chrono::seconds timeout{120};
};

/// POSTs {model, input:[...]} and reads data[i].embedding.
class HttpEmbeddingClient final : public EmbeddingClient {
 public:
  explicit HttpEmbeddingClient(EmbeddingEndpoint endpoint);
  std::vector<Vector> embed_batch(const std::vector<std::string>& texts) override;

 private:
  EmbeddingEndpoint endpoint_;
};

/// Offline stand-in: feature-hashes tokens into `dim` buckets, so texts
/// sharing words land close together. Counts requests.
class HashingEmbeddingClient final : public EmbeddingClient {
 public:
  explicit HashingEmbeddingClient(std::size_t dim = 64) : dim_(dim) {}
  std::vector<Vector> embed_batch(const std::vector<std::string>& texts) override;
  std::size_t requests() const noexcept { return requests_.load(); }

 private:
  std::size_t dim_;
  std::atomic<std::size_t> requests_{0};
};

struct EmbedConfig {
  std::size_t batch_size = 100;
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
  std::size_t concurrency = 1;
};

/// Embeds `texts` in ceil(n / batch_size) requests. Errc::EmptyInput,
/// Errc::EndpointError once retries are spent, Errc::DimensionDrift if the
/// vectors disagree in size or a batch returns the wrong count.
std::vector<Vector> embed(const std::vector<std::string>& texts, EmbeddingClient& client,
                          const EmbedConfig& cfg = {});

/// Sentence-level similarity per pair: cosine of the two embeddings, mapped
/// to [0, 1] as max(0, cos).
std::vector<MetricScore> embedding_cosine(const std::string& name, const std::vector<std::string>& candidates,
                                          const std::vector<std::string>& references, EmbeddingClient& client,
                                          const EmbedConfig& cfg = {});

/// Token-level greedy matching F1 per pair, with token vectors from `client`.
std::vector<MetricScore> embedding_greedy_f1(const std::string& name, std::span<const TokenSeq> candidates,
                                             std::span<const TokenSeq> references, EmbeddingClient& client,
                                             const EmbedConfig& cfg = {});

}  // namespace agrimm::metrics
