#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace agrimm::modelmath {

inline constexpr std::int64_t kDefaultTile = 384;
inline constexpr std::int64_t kDefaultGridSide = 27;  // 27 x 27 = 729 tokens per tile
inline constexpr std::int64_t kDefaultMaxTokens = 8748;
inline constexpr std::int64_t kDefaultMaxTiles = 16;

struct Grid {
  std::int64_t rows = 1;  // n_h
  std::int64_t cols = 1;  // n_w
  bool operator==(const Grid&) const = default;
};

/// Chooses the tile grid for an image. Each candidate a x b with a*b <=
/// max_tiles is scored by the image area that survives an aspect-preserving
/// fit into (b*tile) x (a*tile), capped at the original area; the best score
/// wins, then the least wasted grid area, then fewer tiles, then the squarer
/// grid, then fewer rows. Integer arithmetic throughout.
Grid plan_grid(std::int64_t image_w, std::int64_t image_h, std::int64_t tile = kDefaultTile,
               std::int64_t max_tiles = kDefaultMaxTiles);

/// Effective and wasted area for one candidate, as plan_grid scores it.
struct GridFit {
  std::int64_t effective_area = 0;
  std::int64_t wasted_area = 0;
};
GridFit grid_fit(std::int64_t image_w, std::int64_t image_h, Grid grid, std::int64_t tile);

struct TokenBudget {
  std::int64_t tokens_per_tile = 0;  // N_v
  std::int64_t raw_total = 0;        // L = (n_h*n_w + 1) * N_v
  std::optional<std::int64_t> pooled_side;  // h' = w' when pooling applies
  std::int64_t pooled_total = 0;
  std::int64_t max_tokens = 0;
};

/// Errc::BudgetTooSmall when N_max < N_v or even 1x1 pooled tiles overflow.
TokenBudget token_budget(Grid grid, std::int64_t tokens_per_tile, std::int64_t max_tokens = kDefaultMaxTokens);

struct VisionPlan {
  std::int64_t image_w = 0;
  std::int64_t image_h = 0;
  std::int64_t tile = kDefaultTile;
  std::int64_t max_tiles = kDefaultMaxTiles;
  Grid grid;
  std::int64_t grid_side = kDefaultGridSide;
  TokenBudget budget;

  nlohmann::json to_json() const;
};

VisionPlan plan_vision(std::int64_t image_w, std::int64_t image_h, std::int64_t tile = kDefaultTile,
                       std::int64_t max_tiles = kDefaultMaxTiles, std::int64_t grid_side = kDefaultGridSide,
                       std::int64_t max_tokens = kDefaultMaxTokens);

/// h x w x d feature grid, row-major with channels innermost.
struct FeatureMap {
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t d = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(std::size_t h_, std::size_t w_, std::size_t d_, double fill = 0.0)
      : h(h_), w(w_), d(d_), data(h_ * w_ * d_, fill) {}

  double& at(std::size_t y, std::size_t x, std::size_t c) { return data[(y * w + x) * d + c]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const { return data[(y * w + x) * d + c]; }
};

/// Channel-wise bilinear interpolation, half-pixel centres (align_corners
/// off), source coordinates clamped at the border. Errc::OutOfRange when a
/// target side is zero or the input is empty.
FeatureMap bilinear_resize(const FeatureMap& map, std::size_t out_h, std::size_t out_w);

/// Tokens as rows of d values.
using TokenRows = std::vector<std::vector<double>>;

/// Global map first, then the tiles in the given (row-major grid) order,
/// each flattened row-major. Errc::DimensionMismatch when channel counts
/// differ.
TokenRows layout_sequence(const FeatureMap& global, const std::vector<FeatureMap>& tiles);

}  // namespace agrimm::modelmath
