#pragma once
// Brute-force reference implementations used only by the tests. Each is
// written straight from its textbook definition, independent of the
// library's code paths.

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <vector>

#include "blockbg/dct.hpp"
#include "blockbg/foreground.hpp"
#include "blockbg/imaging.hpp"

namespace oracle {

inline double alpha(int k, int n) { return k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n); }

/// Four nested sums of the orthonormal DCT-II.
inline blockbg::Matrix naive_dct2(const blockbg::Image& img) {
  const int w = img.width(), h = img.height();
  blockbg::Matrix out(h, w);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      double s = 0.0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          s += img(x, y) * std::cos(std::numbers::pi * (2 * x + 1) * u / (2.0 * w)) *
               std::cos(std::numbers::pi * (2 * y + 1) * v / (2.0 * h));
      out(v, u) = alpha(u, w) * alpha(v, h) * s;
    }
  return out;
}

/// Orthonormal DCT-III, the inverse of naive_dct2.
inline std::vector<double> naive_idct2(const blockbg::Matrix& c) {
  const int w = c.cols, h = c.rows;
  std::vector<double> out(static_cast<std::size_t>(w * h));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u)
          s += alpha(u, w) * alpha(v, h) * c(v, u) * std::cos(std::numbers::pi * (2 * x + 1) * u / (2.0 * w)) *
               std::cos(std::numbers::pi * (2 * y + 1) * v / (2.0 * h));
      out[static_cast<std::size_t>(y * w + x)] = s;
    }
  return out;
}

/// Zigzag by sorting (diagonal, row-or-column) keys: odd diagonals by row
/// ascending, even diagonals by column ascending.
inline std::vector<std::pair<int, int>> naive_zigzag(int rows, int cols) {
  std::map<std::pair<int, int>, std::pair<int, int>> keyed;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int d = r + c;
      keyed[{d, d % 2 == 1 ? r : c}] = {r, c};
    }
  std::vector<std::pair<int, int>> out;
  for (const auto& [k, rc] : keyed) out.push_back(rc);
  return out;
}

/// -sum p log2 p from a plain tally.
inline double entropy(const std::vector<std::uint8_t>& px) {
  std::map<int, double> tally;
  for (auto v : px) tally[v] += 1.0;
  double h = 0.0;
  for (const auto& [v, c] : tally) {
    const double p = c / static_cast<double>(px.size());
    h -= p * std::log2(p);
  }
  return h;
}

/// Majority vote over the in-bounds part of each window, ties to 0.
inline blockbg::Mask median(const blockbg::Mask& m, int window) {
  const int r = window / 2;
  blockbg::Mask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      int ones = 0, n = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= m.width() || yy >= m.height()) continue;
          ++n;
          ones += m(xx, yy);
        }
      out.set(x, y, 2 * ones > n);
    }
  return out;
}

/// 8-connected components by union-find; each component is the set of
/// linear pixel indices it contains.
inline std::set<std::set<int>> components(const blockbg::Mask& m) {
  const int w = m.width(), h = m.height();
  std::vector<int> parent(static_cast<std::size_t>(w * h));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[static_cast<std::size_t>(a)] != a) a = parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
    return a;
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!m(x, y)) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= w || yy >= h || !m(xx, yy)) continue;
          parent[static_cast<std::size_t>(find(y * w + x))] = find(yy * w + xx);
        }
    }
  std::map<int, std::set<int>> groups;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (m(x, y)) groups[find(y * w + x)].insert(y * w + x);
  std::set<std::set<int>> out;
  for (auto& [root, g] : groups) out.insert(std::move(g));
  return out;
}

/// Turns a per-pixel label image into the same set-of-sets form.
inline std::set<std::set<int>> partition_of(const std::vector<int>& labels) {
  std::map<int, std::set<int>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != 0) groups[labels[i]].insert(static_cast<int>(i));
  std::set<std::set<int>> out;
  for (auto& [l, g] : groups) out.insert(std::move(g));
  return out;
}

}  // namespace oracle
