#include "agrimm/modelmath/vision.hpp"

#include "agrimm/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace agrimm::modelmath {

namespace {

void require_positive(std::int64_t v, const char* name) {
  if (v <= 0) throw Error(Errc::OutOfRange, name, "must be positive");
}

std::int64_t isqrt(std::int64_t n) {
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

}  // namespace

GridFit grid_fit(std::int64_t image_w, std::int64_t image_h, Grid grid, std::int64_t tile) {
  using i128 = __int128;
  const i128 grid_w = static_cast<i128>(grid.cols) * tile;
  const i128 grid_h = static_cast<i128>(grid.rows) * tile;
  i128 fit_w = 0;
  i128 fit_h = 0;
  // Scale factor is min(grid_w / w, grid_h / h); compare by cross-multiplying.
  if (grid_w * image_h <= grid_h * image_w) {
    fit_w = grid_w;
    fit_h = static_cast<i128>(image_h) * grid_w / image_w;
  } else {
    fit_h = grid_h;
    fit_w = static_cast<i128>(image_w) * grid_h / image_h;
  }
  const i128 effective = std::min(fit_w * fit_h, static_cast<i128>(image_w) * image_h);
  return {static_cast<std::int64_t>(effective), static_cast<std::int64_t>(grid_w * grid_h - effective)};
}

Grid plan_grid(std::int64_t image_w, std::int64_t image_h, std::int64_t tile, std::int64_t max_tiles) {
  require_positive(image_w, "image_w");
  require_positive(image_h, "image_h");
  require_positive(tile, "tile");
  require_positive(max_tiles, "max_tiles");
  Grid best;
  auto key = [&](Grid g) {
    const auto fit = grid_fit(image_w, image_h, g, tile);
    return std::make_tuple(-fit.effective_area, fit.wasted_area, g.rows * g.cols,
                           g.rows > g.cols ? g.rows - g.cols : g.cols - g.rows, g.rows);
  };
  auto best_key = key(best);
  for (std::int64_t a = 1; a <= max_tiles; ++a) {
    for (std::int64_t b = 1; a * b <= max_tiles; ++b) {
      const Grid g{a, b};
      const auto k = key(g);
      if (k < best_key) {
        best = g;
        best_key = k;
      }
    }
  }
  return best;
}

TokenBudget token_budget(Grid grid, std::int64_t tokens_per_tile, std::int64_t max_tokens) {
  require_positive(grid.rows, "n_h");
  require_positive(grid.cols, "n_w");
  require_positive(tokens_per_tile, "N_v");
  const std::int64_t tiles = grid.rows * grid.cols;
  TokenBudget b;
  b.tokens_per_tile = tokens_per_tile;
  b.max_tokens = max_tokens;
  b.raw_total = (tiles + 1) * tokens_per_tile;
  if (max_tokens < tokens_per_tile + tiles) {
    throw Error(Errc::BudgetTooSmall, std::to_string(max_tokens),
                "N_max cannot hold the thumbnail plus one token per tile (" +
                    std::to_string(tokens_per_tile + tiles) + ")");
  }
  if (b.raw_total <= max_tokens) {
    b.pooled_total = b.raw_total;
    return b;
  }
  const std::int64_t side = isqrt((max_tokens - tokens_per_tile) / tiles);
  b.pooled_side = side;
  b.pooled_total = tokens_per_tile + tiles * side * side;
  return b;
}

nlohmann::json VisionPlan::to_json() const {
  nlohmann::json j = {{"image_w", image_w},
                      {"image_h", image_h},
                      {"tile", tile},
                      {"max_tiles", max_tiles},
                      {"grid", {grid.rows, grid.cols}},
                      {"grid_tokens_per_tile", budget.tokens_per_tile},
                      {"raw_total_L", budget.raw_total},
                      {"pooled_total", budget.pooled_total},
                      {"N_max", budget.max_tokens}};
  j["pooled_hw"] = budget.pooled_side ? nlohmann::json{*budget.pooled_side, *budget.pooled_side} : nlohmann::json();
  return j;
}

VisionPlan plan_vision(std::int64_t image_w, std::int64_t image_h, std::int64_t tile, std::int64_t max_tiles,
                       std::int64_t grid_side, std::int64_t max_tokens) {
  require_positive(grid_side, "grid_side");
  VisionPlan plan;
  plan.image_w = image_w;
  plan.image_h = image_h;
  plan.tile = tile;
  plan.max_tiles = max_tiles;
  plan.grid_side = grid_side;
  plan.grid = plan_grid(image_w, image_h, tile, max_tiles);
  plan.budget = token_budget(plan.grid, grid_side * grid_side, max_tokens);
  return plan;
}

FeatureMap bilinear_resize(const FeatureMap& map, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) throw Error(Errc::OutOfRange, "target", "resize target must be at least 1x1");
  if (map.h == 0 || map.w == 0 || map.d == 0 || map.data.size() != map.h * map.w * map.d) {
    throw Error(Errc::OutOfRange, "input", "feature map is empty or malformed");
  }
  struct Tap {
    std::size_t lo, hi;
    double frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t i = 0; i < out; ++i) {
      double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const auto lo = static_cast<std::size_t>(std::floor(src));
      t[i] = {lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
    }
    return t;
  };
  auto lerp = [](double v0, double v1, double f) {
    return std::clamp(v0 + f * (v1 - v0), std::min(v0, v1), std::max(v0, v1));
  };
  const auto ty = taps(map.h, out_h);
  const auto tx = taps(map.w, out_w);
  FeatureMap out(out_h, out_w, map.d);
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t c = 0; c < map.d; ++c) {
        const double top = lerp(map.at(ty[y].lo, tx[x].lo, c), map.at(ty[y].lo, tx[x].hi, c), tx[x].frac);
        const double bottom = lerp(map.at(ty[y].hi, tx[x].lo, c), map.at(ty[y].hi, tx[x].hi, c), tx[x].frac);
        out.at(y, x, c) = lerp(top, bottom, ty[y].frac);
      }
    }
  }
  return out;
}

TokenRows layout_sequence(const FeatureMap& global, const std::vector<FeatureMap>& tiles) {
  TokenRows rows;
  auto append = [&](const FeatureMap& m) {
    if (m.d != global.d) {
      throw Error(Errc::DimensionMismatch, std::to_string(m.d) + " vs " + std::to_string(global.d),
                  "feature maps must share the channel width");
    }
    for (std::size_t y = 0; y < m.h; ++y) {
      for (std::size_t x = 0; x < m.w; ++x) {
        const auto* p = &m.data[(y * m.w + x) * m.d];
        rows.emplace_back(p, p + m.d);
      }
    }
  };
  append(global);
  for (const auto& t : tiles) append(t);
  return rows;
}

}  // namespace agrimm::modelmath
