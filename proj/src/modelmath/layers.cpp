#include "agrimm/modelmath/layers.hpp"

#include "agrimm/common/error.hpp"
#include "agrimm/common/numeric.hpp"
#include "agrimm/common/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace agrimm::modelmath {

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows) + "x" + std::to_string(m.cols); }

}  // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw Error(Errc::ShapeError, shape(a) + " * " + shape(b), "inner dimensions differ");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double stddev) {
  Xorshift64Star rng(seed);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.data.size(); i += 2) {
    double u1 = rng.unit();
    while (u1 <= 0.0) u1 = rng.unit();
    const double u2 = rng.unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    m.data[i] = stddev * radius * std::cos(theta);
    if (i + 1 < m.data.size()) m.data[i + 1] = stddev * radius * std::sin(theta);
  }
  return m;
}

LoraAdapter make_lora(Matrix w0, std::size_t rank, double alpha, std::uint64_t seed) {
  if (rank == 0) throw Error(Errc::ShapeError, "r=0", "LoRA rank must be positive");
  LoraAdapter adapter;
  adapter.a = gaussian_matrix(w0.rows, rank, seed, 1.0 / static_cast<double>(rank));
  adapter.b = Matrix(rank, w0.cols);
  adapter.w0 = std::move(w0);
  adapter.alpha = alpha;
  adapter.rank = rank;
  return adapter;
}

Matrix lora_forward(const Matrix& x, const LoraAdapter& adapter) {
  const auto& [w0, a, b, alpha, rank] = adapter;
  if (a.rows != w0.rows || a.cols != rank || b.rows != rank || b.cols != w0.cols) {
    throw Error(Errc::ShapeError, "W0 " + shape(w0) + ", A " + shape(a) + ", B " + shape(b),
                "adapter shapes are inconsistent");
  }
  Matrix base = matmul(x, w0);
  const Matrix delta = matmul(matmul(x, a), b);
  const double s = adapter.scale();
  for (std::size_t i = 0; i < base.data.size(); ++i) base.data[i] += delta.data[i] * s;
  return base;
}

double gelu(double x, Gelu variant) {
  if (variant == Gelu::Erf) return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
  constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
  return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

Matrix mlp_project(const Matrix& tokens, const ProjectorWeights& wts, Gelu variant) {
  if (wts.b1.size() != wts.w1.cols || wts.w2.rows != wts.w1.cols || wts.b2.size() != wts.w2.cols) {
    throw Error(Errc::ShapeError, "W1 " + shape(wts.w1) + ", W2 " + shape(wts.w2), "projector shapes do not chain");
  }
  Matrix hidden = matmul(tokens, wts.w1);
  for (std::size_t i = 0; i < hidden.rows; ++i) {
    for (std::size_t j = 0; j < hidden.cols; ++j) hidden(i, j) = gelu(hidden(i, j) + wts.b1[j], variant);
  }
  Matrix out = matmul(hidden, wts.w2);
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < out.cols; ++j) out(i, j) += wts.b2[j];
  }
  return out;
}

Matrix splice_sequence(const Matrix& text, std::size_t placeholder, const Matrix& visual) {
  if (placeholder >= text.rows) {
    throw Error(Errc::IndexError, std::to_string(placeholder), "placeholder outside the text sequence");
  }
  if (visual.rows > 0 && visual.cols != text.cols) {
    throw Error(Errc::ShapeError, shape(text) + " vs " + shape(visual), "embedding widths differ");
  }
  Matrix out(text.rows - 1 + visual.rows, text.cols);
  auto row = [&](const Matrix& m, std::size_t r) { return m.data.begin() + static_cast<std::ptrdiff_t>(r * m.cols); };
  auto dst = out.data.begin();
  dst = std::copy(row(text, 0), row(text, placeholder), dst);
  dst = std::copy(visual.data.begin(), visual.data.end(), dst);
  std::copy(row(text, placeholder + 1), text.data.end(), dst);
  return out;
}

double masked_ce_loss(std::span<const double> logprobs, std::span<const int> mask) {
  if (logprobs.size() != mask.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(logprobs.size()) + " vs " + std::to_string(mask.size()),
                "one mask value per target token");
  }
  CompensatedSum sum;
  for (std::size_t t = 0; t < logprobs.size(); ++t) {
    if (logprobs[t] > 0.0 || std::isnan(logprobs[t])) {
      throw Error(Errc::PositiveLogProb, std::to_string(t), "log-probabilities must be <= 0");
    }
    if (mask[t] != 0 && mask[t] != 1) throw Error(Errc::OutOfRange, std::to_string(t), "mask values are 0 or 1");
    if (mask[t] == 1) sum.add(logprobs[t]);
  }
  const double loss = -sum.value();
  return loss == 0.0 ? 0.0 : loss;
}

}  // namespace agrimm::modelmath
