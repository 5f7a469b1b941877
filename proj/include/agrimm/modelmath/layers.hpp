#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace agrimm::modelmath {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  static Matrix identity(std::size_t n);
  bool operator==(const Matrix&) const = default;
};

/// Plain triple loop, accumulating over k in order. Errc::ShapeError.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Seeded N(0, stddev^2) entries (Box-Muller over xorshift64*).
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double stddev = 1.0);

struct LoraAdapter {
  Matrix w0;  // D_in x D_out, frozen
  Matrix a;   // D_in x r
  Matrix b;   // r x D_out
  double alpha = 1.0;
  std::size_t rank = 1;

  double scale() const { return alpha / static_cast<double>(rank); }
};

/// Fresh adapter: A Gaussian with stddev 1/r, B zero. Errc::ShapeError for
/// rank 0.
LoraAdapter make_lora(Matrix w0, std::size_t rank, double alpha, std::uint64_t seed);

/// xW0 + (xA)B * (alpha / r). Errc::ShapeError.
Matrix lora_forward(const Matrix& x, const LoraAdapter& adapter);

enum class Gelu { Tanh, Erf };
/// Tanh form uses sqrt(2/pi) and 0.044715.
double gelu(double x, Gelu variant = Gelu::Tanh);

struct ProjectorWeights {
  Matrix w1;  // d_v x d_mid
  std::vector<double> b1;
  Matrix w2;  // d_mid x d_llm
  std::vector<double> b2;
};

inline constexpr std::size_t kVisionWidth = 1152;
inline constexpr std::size_t kLlmWidth = 3584;

/// GELU(H W1 + b1) W2 + b2. Errc::ShapeError.
Matrix mlp_project(const Matrix& tokens, const ProjectorWeights& weights, Gelu variant = Gelu::Tanh);

/// Text rows before `placeholder`, all visual rows, then the text rows after
/// it. Errc::IndexError for a placeholder outside [0, n);
/// Errc::ShapeError when widths differ.
Matrix splice_sequence(const Matrix& text, std::size_t placeholder, const Matrix& visual);

/// -sum_t mask_t * logprob_t with compensated summation.
/// Errc::LengthMismatch, Errc::PositiveLogProb, Errc::OutOfRange for a mask
/// value other than 0 or 1.
double masked_ce_loss(std::span<const double> logprobs, std::span<const int> mask);

}  // namespace agrimm::modelmath
