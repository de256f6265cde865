#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "blockbg/error.hpp"
#include "blockbg/imaging.hpp"

namespace blockbg {

/// Dense row-major matrix of transform coefficients.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

  double operator()(int r, int c) const noexcept { return data[static_cast<std::size_t>(r * cols + c)]; }
  double& operator()(int r, int c) noexcept { return data[static_cast<std::size_t>(r * cols + c)]; }
};

namespace detail {

/// Orthonormal DCT-II basis for length n, laid out basis[k * n + i] =
/// c_k cos(pi (2i + 1) k / 2n). Cached per thread.
inline const std::vector<double>& dct_basis(int n) {
  thread_local std::unordered_map<int, std::vector<double>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> basis(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  const double c0 = std::sqrt(1.0 / n);
  const double ck = std::sqrt(2.0 / n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      basis[static_cast<std::size_t>(k * n + i)] =
          (k == 0 ? c0 : ck) * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n));
    }
  }
  return cache.emplace(n, std::move(basis)).first->second;
}

}  // namespace detail

/// Orthonormal 2-D DCT-II of a pixel region, applied separably (rows, then
/// columns). Output is block_height x block_width.
inline Matrix dct2(const Image& block) {
  const int w = block.width();
  const int h = block.height();
  if (w < 1 || h < 1) throw Error(ErrorCode::EmptyRegion, "dct2 of an empty block");
  const auto& bw = detail::dct_basis(w);
  const auto& bh = detail::dct_basis(h);

  Matrix rows_done(h, w);
  for (int y = 0; y < h; ++y) {
    const auto px = block.row(y);
    for (int u = 0; u < w; ++u) {
      const double* basis = &bw[static_cast<std::size_t>(u * w)];
      double acc = 0.0;
      for (int x = 0; x < w; ++x) acc += basis[x] * px[static_cast<std::size_t>(x)];
      rows_done(y, u) = acc;
    }
  }
  Matrix out(h, w);
  for (int v = 0; v < h; ++v) {
    const double* basis = &bh[static_cast<std::size_t>(v * h)];
    for (int y = 0; y < h; ++y) {
      const double b = basis[y];
      const double* src = &rows_done.data[static_cast<std::size_t>(y * w)];
      double* dst = &out.data[static_cast<std::size_t>(v * w)];
      for (int u = 0; u < w; ++u) dst[u] += b * src[u];
    }
  }
  return out;
}

/// Anti-diagonal zigzag order (JPEG scan) generalized to rows x cols. Odd
/// diagonals run top-right to bottom-left, even ones bottom-left to top-right.
inline std::vector<std::pair<int, int>> zigzag_order(int rows, int cols) {
  std::vector<std::pair<int, int>> order;
  order.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (int d = 0; d <= rows + cols - 2; ++d) {
    const int r_lo = std::max(0, d - (cols - 1));
    const int r_hi = std::min(d, rows - 1);
    if (d % 2 == 1) {
      for (int r = r_lo; r <= r_hi; ++r) order.emplace_back(r, d - r);
    } else {
      for (int r = r_hi; r >= r_lo; --r) order.emplace_back(r, d - r);
    }
  }
  return order;
}

/// First `keep` coefficients in zigzag order.
inline std::vector<double> zigzag_take(const Matrix& coeffs, int keep) {
  const int total = coeffs.rows * coeffs.cols;
  if (keep < 1 || keep > total) {
    throw Error(ErrorCode::InvalidParameter,
                "zigzag count " + std::to_string(keep) + " outside [1, " + std::to_string(total) + "]");
  }
  std::vector<double> features;
  features.reserve(static_cast<std::size_t>(keep));
  for (int d = 0; static_cast<int>(features.size()) < keep; ++d) {
    const int r_lo = std::max(0, d - (coeffs.cols - 1));
    const int r_hi = std::min(d, coeffs.rows - 1);
    if (d % 2 == 1) {
      for (int r = r_lo; r <= r_hi && static_cast<int>(features.size()) < keep; ++r)
        features.push_back(coeffs(r, d - r));
    } else {
      for (int r = r_hi; r >= r_lo && static_cast<int>(features.size()) < keep; --r)
        features.push_back(coeffs(r, d - r));
    }
  }
  return features;
}

}  // namespace blockbg
