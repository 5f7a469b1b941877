#pragma once

// Independent restatements of the vision-side arithmetic for tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

struct Candidate {
  std::int64_t rows, cols, effective, wasted;
};

// Enumerates every rows x cols grid with rows*cols <= max_tiles, scores it by
// the image area surviving an aspect-preserving downscale into the grid
// canvas (capped at the original area), and sorts by the documented
// preference order. Returns {rows, cols} of the winner.
inline std::pair<std::int64_t, std::int64_t> best_grid(std::int64_t w, std::int64_t h, std::int64_t tile,
                                                       std::int64_t max_tiles) {
  std::vector<Candidate> all;
  for (std::int64_t rows = 1; rows <= max_tiles; ++rows) {
    for (std::int64_t cols = 1; rows * cols <= max_tiles; ++cols) {
      const std::int64_t gw = cols * tile, gh = rows * tile;
      std::int64_t dw, dh;
      // compare gw/w against gh/h without division
      if (static_cast<__int128>(gw) * h <= static_cast<__int128>(gh) * w) {
        dw = gw;
        dh = static_cast<std::int64_t>(static_cast<__int128>(h) * gw / w);
      } else {
        dh = gh;
        dw = static_cast<std::int64_t>(static_cast<__int128>(w) * gh / h);
      }
      const std::int64_t effective = std::min(dw * dh, w * h);
      all.push_back({rows, cols, effective, gw * gh - effective});
    }
  }
  std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
    auto key = [](const Candidate& c) {
      const auto diff = c.rows > c.cols ? c.rows - c.cols : c.cols - c.rows;
      return std::make_tuple(-c.effective, c.wasted, c.rows * c.cols, diff, c.rows);
    };
    return key(a) < key(b);
  });
  return {all.front().rows, all.front().cols};
}

// Bilinear sample of one output pixel, half-pixel centres, clamped.
inline double bilinear_pixel(const std::vector<std::vector<double>>& img, std::size_t out_h, std::size_t out_w,
                             std::size_t oy, std::size_t ox) {
  const double in_h = static_cast<double>(img.size());
  const double in_w = static_cast<double>(img[0].size());
  double sy = (static_cast<double>(oy) + 0.5) * in_h / static_cast<double>(out_h) - 0.5;
  double sx = (static_cast<double>(ox) + 0.5) * in_w / static_cast<double>(out_w) - 0.5;
  sy = std::clamp(sy, 0.0, in_h - 1);
  sx = std::clamp(sx, 0.0, in_w - 1);
  const auto y0 = static_cast<std::size_t>(std::floor(sy));
  const auto x0 = static_cast<std::size_t>(std::floor(sx));
  const auto y1 = std::min(y0 + 1, img.size() - 1);
  const auto x1 = std::min(x0 + 1, img[0].size() - 1);
  const double fy = sy - static_cast<double>(y0), fx = sx - static_cast<double>(x0);
  const double top = img[y0][x0] * (1 - fx) + img[y0][x1] * fx;
  const double bottom = img[y1][x0] * (1 - fx) + img[y1][x1] * fx;
  return top * (1 - fy) + bottom * fy;
}

inline std::vector<double> row_times(const std::vector<double>& x, const std::vector<double>& m, std::size_t cols) {
  std::vector<double> out(cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) acc += x[k] * m[k * cols + j];
    out[j] = acc;
  }
  return out;
}

}  // namespace oracle
