#include "agrimm/metrics/embedding.hpp"

#include "agrimm/common/error.hpp"
#include "agrimm/common/jsonl.hpp"
#include "agrimm/synthesis/chat_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>

namespace agrimm::metrics {

MetricScore greedy_match_f1(const SimMatrix& sim) {
  if (sim.empty() || sim.front().empty()) throw Error(Errc::EmptyMatrix, "", "similarity matrix is empty");
  const std::size_t cols = sim.front().size();
  std::vector<double> col_max(cols, -std::numeric_limits<double>::infinity());
  double row_sum = 0.0;
  for (const auto& row : sim) {
    if (row.size() != cols) throw Error(Errc::EmptyMatrix, "ragged", "similarity matrix rows differ in length");
    double row_max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols; ++j) {
      if (!std::isfinite(row[j])) throw Error(Errc::OutOfRange, "sim", "non-finite similarity");
      row_max = std::max(row_max, row[j]);
      col_max[j] = std::max(col_max[j], row[j]);
    }
    row_sum += row_max;
  }
  double col_sum = 0.0;
  for (double v : col_max) col_sum += v;
  const double p = row_sum / static_cast<double>(sim.size());
  const double r = col_sum / static_cast<double>(cols);
  const double f = p + r != 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  MetricScore score{"greedy_f1", f, {{"precision", p}, {"recall", r}, {"f1", f}}};
  return score;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size() || u.empty()) {
    throw Error(Errc::DimensionMismatch, std::to_string(u.size()) + " vs " + std::to_string(v.size()),
                "cosine needs equal non-zero dimensions");
  }
  double dot = 0.0;
  double nu = 0.0;
  double nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw Error(Errc::ZeroVector, "", "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

HttpEmbeddingClient::HttpEmbeddingClient(EmbeddingEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  synthesis::split_url(endpoint_.url);
}

std::vector<Vector> HttpEmbeddingClient::embed_batch(const std::vector<std::string>& texts) {
  const auto parts = synthesis::split_url(endpoint_.url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(endpoint_.timeout);
  client.set_read_timeout(endpoint_.timeout);
  client.set_write_timeout(endpoint_.timeout);
  if (endpoint_.bearer_token) client.set_bearer_token_auth(*endpoint_.bearer_token);

  const json request = {{"model", endpoint_.model}, {"input", texts}};
  auto result = client.Post(parts.path, request.dump(), "application/json");
  if (!result) {
    throw Error(Errc::EndpointError, endpoint_.url, "transport: " + httplib::to_string(result.error()));
  }
  if (result->status < 200 || result->status >= 300) {
    throw Error(Errc::EndpointError, endpoint_.url, "HTTP " + std::to_string(result->status)).with_raw(result->body);
  }
  try {
    const auto body = json::parse(result->body);
    const auto& data = body.at("data");
    std::vector<Vector> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& item = data.at(i);
      const std::size_t slot = item.contains("index") ? item.at("index").get<std::size_t>() : i;
      if (slot >= out.size()) throw Error(Errc::EndpointError, endpoint_.url, "embedding index out of range");
      out[slot] = item.at("embedding").get<Vector>();
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(Errc::EndpointError, endpoint_.url, std::string("unexpected body: ") + e.what())
        .with_raw(result->body);
  }
}

std::vector<Vector> HashingEmbeddingClient::embed_batch(const std::vector<std::string>& texts) {
  requests_.fetch_add(1);
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    Vector v(dim_, 0.0);
    for (const auto& token : tokenize(text).tokens) {
      std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
      for (unsigned char ch : token) {
        h ^= ch;
        h *= 1099511628211ULL;
      }
      v[h % dim_] += (h >> 63) != 0 ? -1.0 : 1.0;
    }
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) v.back() = 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Vector> embed(const std::vector<std::string>& texts, EmbeddingClient& client, const EmbedConfig& cfg) {
  if (texts.empty()) throw Error(Errc::EmptyInput, "texts", "nothing to embed");
  const std::size_t batch = std::max<std::size_t>(1, cfg.batch_size);
  const std::size_t batches = (texts.size() + batch - 1) / batch;
  std::vector<Vector> out(texts.size());

  auto run_batch = [&](std::size_t b) {
    const std::size_t begin = b * batch;
    const std::size_t end = std::min(texts.size(), begin + batch);
    std::vector<std::string> slice(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                   texts.begin() + static_cast<std::ptrdiff_t>(end));
    for (int attempt = 0;; ++attempt) {
      try {
        auto vectors = client.embed_batch(slice);
        if (vectors.size() != slice.size()) {
          throw Error(Errc::DimensionDrift, "batch " + std::to_string(b),
                      "endpoint returned " + std::to_string(vectors.size()) + " vectors for " +
                          std::to_string(slice.size()) + " texts");
        }
        std::move(vectors.begin(), vectors.end(), out.begin() + static_cast<std::ptrdiff_t>(begin));
        return;
      } catch (const Error& e) {
        if (e.code() != Errc::EndpointError || attempt + 1 >= std::max(1, cfg.max_retries)) throw;
        std::this_thread::sleep_for(cfg.backoff_base * (1 << attempt));
      }
    }
  };

  const std::size_t width = std::clamp<std::size_t>(cfg.concurrency, 1, batches);
  if (width == 1) {
    for (std::size_t b = 0; b < batches; ++b) run_batch(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < width; ++t) {
      pool.emplace_back([&] {
        for (std::size_t b; (b = next.fetch_add(1)) < batches;) {
          try {
            run_batch(b);
          } catch (...) {
            std::lock_guard lock(mutex);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  const std::size_t dim = out.front().size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].size() != dim || dim == 0) {
      throw Error(Errc::DimensionDrift, "text " + std::to_string(i),
                  "dimension " + std::to_string(out[i].size()) + " differs from " + std::to_string(dim));
    }
  }
  return out;
}

std::vector<MetricScore> embedding_cosine(const std::string& name, const std::vector<std::string>& candidates,
                                          const std::vector<std::string>& references, EmbeddingClient& client,
                                          const EmbedConfig& cfg) {
  if (candidates.size() != references.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(candidates.size()) + " vs " + std::to_string(references.size()),
                "one reference per candidate");
  }
  std::vector<std::string> all = candidates;
  all.insert(all.end(), references.begin(), references.end());
  const auto vectors = embed(all, client, cfg);
  std::vector<MetricScore> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double c = cosine(vectors[i], vectors[candidates.size() + i]);
    out.push_back({name, std::max(0.0, c), {{"cosine", c}}});
  }
  return out;
}

std::vector<MetricScore> embedding_greedy_f1(const std::string& name, std::span<const TokenSeq> candidates,
                                             std::span<const TokenSeq> references, EmbeddingClient& client,
                                             const EmbedConfig& cfg) {
  if (candidates.size() != references.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(candidates.size()) + " vs " + std::to_string(references.size()),
                "one reference per candidate");
  }
  std::vector<std::string> vocab;
  for (auto seqs : {candidates, references}) {
    for (const auto& s : seqs) vocab.insert(vocab.end(), s.tokens.begin(), s.tokens.end());
  }
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());

  std::unordered_map<std::string, Vector> table;
  if (!vocab.empty()) {
    auto vectors = embed(vocab, client, cfg);
    for (std::size_t i = 0; i < vocab.size(); ++i) table.emplace(vocab[i], std::move(vectors[i]));
  }

  std::vector<MetricScore> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i].tokens;
    const auto& r = references[i].tokens;
    if (c.empty() || r.empty()) {
      out.push_back({name, 0.0, {{"precision", 0.0}, {"recall", 0.0}, {"f1", 0.0}}});
      continue;
    }
    SimMatrix sim(c.size(), std::vector<double>(r.size()));
    for (std::size_t a = 0; a < c.size(); ++a) {
      for (std::size_t b = 0; b < r.size(); ++b) sim[a][b] = cosine(table.at(c[a]), table.at(r[b]));
    }
    auto score = greedy_match_f1(sim);
    score.name = name;
    score.value = std::clamp(score.value, 0.0, 1.0);
    out.push_back(std::move(score));
  }
  return out;
}

}  // namespace agrimm::metrics
