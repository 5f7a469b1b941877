#include "agrimm/common/error.hpp"
#include "agrimm/common/rng.hpp"
#include "agrimm/modelmath/layers.hpp"
#include "agrimm/modelmath/vision.hpp"
#include "modelmath_oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace agrimm;
using namespace agrimm::modelmath;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return Errc::IoError;
}

FeatureMap ramp(std::size_t h, std::size_t w, std::size_t d = 1) {
  FeatureMap m(h, w, d);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < d; ++c) m.at(y, x, c) = static_cast<double>(y * w + x) + 100.0 * static_cast<double>(c);
    }
  }
  return m;
}

}  // namespace

TEST(PlanGrid, Examples) {
  EXPECT_EQ(plan_grid(384, 384, 384, 16), (Grid{1, 1}));
  EXPECT_EQ(plan_grid(768, 384, 384, 16), (Grid{1, 2}));
  EXPECT_EQ(plan_grid(1344, 1344, 384, 16), (Grid{4, 4}));
  EXPECT_EQ(plan_grid(384, 768, 384, 16), (Grid{2, 1}));
}

TEST(PlanGrid, MatchesExhaustiveOracleOnLattice) {
  std::vector<std::int64_t> sides;
  for (int i = 0; i < 8; ++i) sides.push_back(100 + 530 * i);  // 100 .. 3810
  for (std::int64_t max_tiles : {4, 9, 16}) {
    for (auto w : sides) {
      for (auto h : sides) {
        const auto [rows, cols] = oracle::best_grid(w, h, 384, max_tiles);
        EXPECT_EQ(plan_grid(w, h, 384, max_tiles), (Grid{rows, cols})) << w << "x" << h << " max " << max_tiles;
      }
    }
  }
}

TEST(PlanGrid, RandomSizesAgreeWithOracle) {
  Xorshift64Star rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const auto w = static_cast<std::int64_t>(1 + rng.below(4096));
    const auto h = static_cast<std::int64_t>(1 + rng.below(4096));
    const auto max_tiles = static_cast<std::int64_t>(1 + rng.below(16));
    const auto [rows, cols] = oracle::best_grid(w, h, 384, max_tiles);
    const auto g = plan_grid(w, h, 384, max_tiles);
    EXPECT_EQ(g, (Grid{rows, cols})) << w << "x" << h;
    EXPECT_LE(g.rows * g.cols, max_tiles);
  }
}

TEST(TokenBudget, Examples) {
  const auto small = token_budget({1, 1}, 729, 8748);
  EXPECT_EQ(small.raw_total, 1458);
  EXPECT_FALSE(small.pooled_side.has_value());
  EXPECT_EQ(small.pooled_total, 1458);

  const auto big = token_budget({4, 4}, 729, 8748);
  EXPECT_EQ(big.raw_total, 12393);
  EXPECT_EQ(big.pooled_side, 22);
  EXPECT_EQ(big.pooled_total, 729 + 16 * 484);
  EXPECT_EQ(big.pooled_total, 8473);

  const auto nine = token_budget({3, 3}, 729, 8748);
  EXPECT_EQ(nine.raw_total, 7290);
  EXPECT_FALSE(nine.pooled_side.has_value());
}

TEST(TokenBudget, TooSmall) {
  EXPECT_EQ(code_of([] { token_budget({1, 1}, 729, 700); }), Errc::BudgetTooSmall);
  EXPECT_EQ(code_of([] { token_budget({4, 4}, 729, 729 + 15); }), Errc::BudgetTooSmall);
  EXPECT_EQ(token_budget({4, 4}, 729, 729 + 16).pooled_side, 1);
}

TEST(TokenBudget, PooledSideIsLargestThatFits) {
  for (std::int64_t tiles = 1; tiles <= 16; ++tiles) {
    for (std::int64_t n_max = 729 + tiles; n_max < 20000; n_max += 97) {
      const auto b = token_budget({1, tiles}, 729, n_max);
      EXPECT_LE(b.pooled_total, n_max);
      if (b.pooled_side) {
        const auto s = *b.pooled_side;
        EXPECT_LE(729 + tiles * s * s, n_max);
        EXPECT_GT(729 + tiles * (s + 1) * (s + 1), n_max);
        EXPECT_GT(b.raw_total, n_max);
      } else {
        EXPECT_EQ(b.pooled_total, b.raw_total);
      }
    }
  }
}

TEST(VisionPlan, FuzzedImagesStayUnderBudget) {
  Xorshift64Star rng(21);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto w = static_cast<std::int64_t>(1 + rng.below(4096));
    const auto h = static_cast<std::int64_t>(1 + rng.below(4096));
    const auto plan = plan_vision(w, h);
    EXPECT_LE(plan.budget.pooled_total, 8748);
    EXPECT_EQ(plan.budget.raw_total, (plan.grid.rows * plan.grid.cols + 1) * 729);
  }
  const auto j = plan_vision(1344, 1344).to_json();
  EXPECT_EQ(j.at("pooled_total"), 8473);
  EXPECT_EQ(j.at("N_max"), 8748);
}

TEST(Bilinear, IdentityConstantAndRamp) {
  const auto r = ramp(5, 7, 3);
  const auto same = bilinear_resize(r, 5, 7);
  for (std::size_t i = 0; i < r.data.size(); ++i) EXPECT_NEAR(same.data[i], r.data[i], 1e-12);

  const FeatureMap constant(6, 9, 2, 3.25);
  for (auto [oh, ow] : {std::pair{1u, 1u}, {4u, 13u}, {17u, 2u}}) {
    const auto out = bilinear_resize(constant, oh, ow);
    for (double v : out.data) EXPECT_EQ(v, 3.25);
  }

  const auto r4 = ramp(4, 4);
  std::vector<std::vector<double>> img(4, std::vector<double>(4));
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t x = 0; x < 4; ++x) img[y][x] = r4.at(y, x, 0);
  }
  const auto down = bilinear_resize(r4, 2, 2);
  for (std::size_t y = 0; y < 2; ++y) {
    for (std::size_t x = 0; x < 2; ++x) EXPECT_NEAR(down.at(y, x, 0), oracle::bilinear_pixel(img, 2, 2, y, x), 1e-12);
  }
  EXPECT_NEAR(down.at(0, 0, 0), 2.5, 1e-12);
}

TEST(Bilinear, RandomMapsMatchOracleAndStayInRange) {
  Xorshift64Star rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t h = 1 + rng.below(9), w = 1 + rng.below(9);
    FeatureMap m(h, w, 1);
    std::vector<std::vector<double>> img(h, std::vector<double>(w));
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) img[y][x] = m.at(y, x, 0) = rng.unit() * 10 - 5;
    }
    const double lo = *std::min_element(m.data.begin(), m.data.end());
    const double hi = *std::max_element(m.data.begin(), m.data.end());
    const std::size_t oh = 1 + rng.below(12), ow = 1 + rng.below(12);
    const auto out = bilinear_resize(m, oh, ow);
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        EXPECT_NEAR(out.at(y, x, 0), oracle::bilinear_pixel(img, oh, ow, y, x), 1e-12);
        EXPECT_GE(out.at(y, x, 0), lo);
        EXPECT_LE(out.at(y, x, 0), hi);
      }
    }
  }
  EXPECT_EQ(code_of([] { bilinear_resize(FeatureMap(2, 2, 1), 0, 1); }), Errc::OutOfRange);
}

TEST(Layout, OrderAndLength) {
  const auto global = ramp(2, 2, 3);
  EXPECT_EQ(layout_sequence(global, {}).size(), 4u);
  FeatureMap t1(2, 2, 3, 1.0), t2(2, 2, 3, 2.0);
  const auto seq = layout_sequence(global, {t1, t2});
  ASSERT_EQ(seq.size(), 12u);
  for (std::size_t i = 4; i < 8; ++i) EXPECT_EQ(seq[i][0], 1.0);
  for (std::size_t i = 8; i < 12; ++i) EXPECT_EQ(seq[i][0], 2.0);
  EXPECT_EQ(seq[3][0], global.at(1, 1, 0));
  EXPECT_NE(layout_sequence(global, {t2, t1}), seq);
  EXPECT_EQ(code_of([&] { layout_sequence(global, {FeatureMap(2, 2, 4)}); }), Errc::DimensionMismatch);
}

TEST(Lora, HandExample) {
  LoraAdapter ad;
  ad.w0 = Matrix::identity(2);
  ad.a = Matrix(2, 1);
  ad.a(0, 0) = 1;
  ad.b = Matrix(1, 2);
  ad.b(0, 1) = 1;
  ad.alpha = 2;
  ad.rank = 1;
  Matrix x(1, 2);
  x(0, 0) = 1;
  const auto h = lora_forward(x, ad);
  EXPECT_EQ(h(0, 0), 1.0);
  EXPECT_EQ(h(0, 1), 2.0);
}

TEST(Lora, PaperScales) {
  EXPECT_EQ(make_lora(Matrix(4, 4), 128, 256, 1).scale(), 2.0);
  EXPECT_EQ(make_lora(Matrix(4, 4), 32, 64, 1).scale(), 2.0);
}

TEST(Lora, FreshAdapterIsIdentity) {
  Xorshift64Star rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t din = 1 + rng.below(24), dout = 1 + rng.below(24), r = 1 + rng.below(8);
    const auto w0 = gaussian_matrix(din, dout, rng.next());
    const auto x = gaussian_matrix(1, din, rng.next(), 3.0);
    const auto ad = make_lora(w0, r, 2.0 * static_cast<double>(r), rng.next());
    EXPECT_TRUE(std::all_of(ad.b.data.begin(), ad.b.data.end(), [](double v) { return v == 0.0; }));
    const auto h = lora_forward(x, ad);
    EXPECT_EQ(h.data, oracle::row_times(x.data, w0.data, dout));
  }
}

TEST(Lora, ShapeErrorsAndInitStatistics) {
  EXPECT_EQ(code_of([] { make_lora(Matrix(2, 2), 0, 1, 1); }), Errc::ShapeError);
  EXPECT_EQ(code_of([] { lora_forward(Matrix(1, 3), make_lora(Matrix(2, 2), 1, 1, 1)); }), Errc::ShapeError);
  const auto ad = make_lora(Matrix(400, 8), 50, 100, 5);
  double sum = 0, sq = 0;
  for (double v : ad.a.data) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(ad.a.data.size());
  EXPECT_NEAR(sum / n, 0.0, 0.002);
  EXPECT_NEAR(std::sqrt(sq / n), 1.0 / 50.0, 0.002);
  EXPECT_EQ(make_lora(Matrix(3, 3), 2, 4, 9).a, make_lora(Matrix(3, 3), 2, 4, 9).a);
}

TEST(Gelu, Anchors) {
  EXPECT_EQ(gelu(0.0), 0.0);
  EXPECT_EQ(gelu(0.0, Gelu::Erf), 0.0);
  for (double x : {-3.0, -1.0, -0.5, 0.3, 1.0, 2.5}) {
    const double tanh_form = 0.5 * x * (1 + std::tanh(std::sqrt(2 / std::numbers::pi) * (x + 0.044715 * x * x * x)));
    EXPECT_NEAR(gelu(x), tanh_form, 1e-15);
    EXPECT_NEAR(gelu(x, Gelu::Erf), 0.5 * x * (1 + std::erf(x / std::numbers::sqrt2)), 1e-15);
    EXPECT_NEAR(gelu(x), gelu(x, Gelu::Erf), 1e-3);
  }
}

TEST(Projector, AffineCollapseAndScalarOracle) {
  ProjectorWeights zero{Matrix(3, 4), std::vector<double>(4, 0.0), Matrix(4, 2), {0.5, -1.5}};
  const auto out = mlp_project(Matrix(5, 3, 7.0), zero);
  ASSERT_EQ(out.rows, 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(out(i, 0), 0.5);
    EXPECT_EQ(out(i, 1), -1.5);
  }
  ProjectorWeights ones{Matrix(2, 2, 1.0), {0, 0}, Matrix(2, 2, 1.0), {0, 0}};
  Matrix x(1, 2);
  x(0, 0) = 0.3;
  x(0, 1) = -0.8;
  const double s = -0.5;
  const double g = 0.5 * s * (1 + std::tanh(std::sqrt(2 / std::numbers::pi) * (s + 0.044715 * s * s * s)));
  const auto y = mlp_project(x, ones);
  EXPECT_NEAR(y(0, 0), 2 * g, 1e-15);
  EXPECT_NEAR(y(0, 1), 2 * g, 1e-15);
  EXPECT_EQ(code_of([&] { mlp_project(Matrix(1, 3), ones); }), Errc::ShapeError);
}

TEST(Projector, DefaultWidths) {
  ProjectorWeights w{Matrix(kVisionWidth, kLlmWidth), std::vector<double>(kLlmWidth, 0.0), Matrix(kLlmWidth, kLlmWidth),
                     std::vector<double>(kLlmWidth, 0.0)};
  const auto out = mlp_project(Matrix(1, kVisionWidth, 1.0), w);
  EXPECT_EQ(out.cols, 3584u);
}

TEST(Splice, Layout) {
  Matrix text(3, 2);
  for (std::size_t i = 0; i < 3; ++i) text(i, 0) = static_cast<double>(i);
  Matrix visual(2, 2, 9.0);
  visual(1, 0) = 8.0;
  const auto s = splice_sequence(text, 1, visual);
  ASSERT_EQ(s.rows, 4u);
  EXPECT_EQ(s(0, 0), 0.0);
  EXPECT_EQ(s(1, 0), 9.0);
  EXPECT_EQ(s(2, 0), 8.0);
  EXPECT_EQ(s(3, 0), 2.0);
  const auto lead = splice_sequence(text, 0, visual);
  EXPECT_EQ(lead(0, 0), 9.0);
  EXPECT_EQ(code_of([&] { splice_sequence(text, 3, visual); }), Errc::IndexError);
  EXPECT_EQ(code_of([&] { splice_sequence(text, 0, Matrix(1, 3)); }), Errc::ShapeError);
}

TEST(Splice, LengthFuzz) {
  Xorshift64Star rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(20), l = rng.below(30), d = 1 + rng.below(4);
    const auto s = splice_sequence(Matrix(n, d), rng.below(n), Matrix(l, d));
    EXPECT_EQ(s.rows, n - 1 + l);
  }
}

TEST(MaskedLoss, Examples) {
  const std::vector<double> lp{std::log(0.5), std::log(0.5), std::log(0.25)};
  EXPECT_NEAR(masked_ce_loss(lp, std::vector<int>{0, 1, 1}), std::log(8.0), 1e-12);
  EXPECT_EQ(masked_ce_loss(lp, std::vector<int>{0, 0, 0}), 0.0);
  EXPECT_NEAR(masked_ce_loss(lp, std::vector<int>{1, 1, 1}), -(lp[0] + lp[1] + lp[2]), 1e-15);
  EXPECT_EQ(code_of([&] { masked_ce_loss(lp, std::vector<int>{1, 1}); }), Errc::LengthMismatch);
  EXPECT_EQ(code_of([] { masked_ce_loss(std::vector<double>{0.1}, std::vector<int>{1}); }), Errc::PositiveLogProb);
  EXPECT_EQ(code_of([&] { masked_ce_loss(lp, std::vector<int>{0, 2, 1}); }), Errc::OutOfRange);
}

TEST(MaskedLoss, LinearInDisjointMasks) {
  Xorshift64Star rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = 1 + rng.below(64);
    std::vector<double> lp(t);
    for (auto& v : lp) v = std::log(1e-6 + rng.unit() * (1 - 1e-6));
    std::vector<int> m1(t, 0), m2(t, 0), both(t, 0);
    for (std::size_t i = 0; i < t; ++i) {
      const auto pick = rng.below(3);
      if (pick == 1) m1[i] = 1;
      if (pick == 2) m2[i] = 1;
      both[i] = m1[i] + m2[i];
    }
    const double sum = masked_ce_loss(lp, m1) + masked_ce_loss(lp, m2);
    EXPECT_NEAR(sum, masked_ce_loss(lp, both), 1e-12 * std::max(1.0, sum));
  }
}
