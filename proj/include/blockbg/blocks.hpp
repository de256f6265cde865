#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "blockbg/error.hpp"
#include "blockbg/imaging.hpp"

namespace blockbg {

/// Gray-level occurrence counts of a pixel region.
struct Histogram {
  std::array<std::uint64_t, kGrayLevels> counts{};
  std::uint64_t total = 0;

  double probability(int level) const noexcept {
    return static_cast<double>(counts[static_cast<std::size_t>(level)]) / static_cast<double>(total);
  }
};

inline Histogram histogram(std::span<const std::uint8_t> pixels) {
  if (pixels.empty()) throw Error(ErrorCode::EmptyRegion, "histogram of an empty region");
  Histogram h;
  for (const auto v : pixels) ++h.counts[v];
  h.total = pixels.size();
  return h;
}

inline Histogram histogram(const Image& region) { return histogram(region.pixels()); }

/// Shannon entropy in bits, H = -sum p_i log2 p_i over the 256 gray levels.
inline double image_entropy(const Histogram& h) {
  double entropy = 0.0;
  const double total = static_cast<double>(h.total);
  for (const auto c : h.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    entropy -= p * std::log2(p);
  }
  // A single occupied level yields -1*log2(1) = -0.0.
  return entropy <= 0.0 ? 0.0 : entropy;
}

inline double image_entropy(const Image& region) { return image_entropy(histogram(region)); }

/// Entropy-delta band edges for automatic grid selection.
struct GridThresholds {
  double low = 0.05;
  double high = 0.2;
};

inline void validate(const GridThresholds& t) {
  if (!(t.low >= 0.0) || !(t.high >= t.low)) {
    throw Error(ErrorCode::InvalidParameter, "grid thresholds need 0 <= low <= high");
  }
}

/// Cells per side for a given inter-frame entropy delta: a larger delta means
/// a busier scene and therefore smaller blocks.
inline int grid_for_entropy_delta(double delta_h, const GridThresholds& t = {}) {
  if (delta_h < t.low) return 8;
  if (delta_h < t.high) return 16;
  return 32;
}

inline double entropy_delta(const Frame& first, const Frame& second) {
  if (!first.same_shape(second)) {
    throw Error(ErrorCode::InconsistentSequence, "frames differ in dimensions");
  }
  return std::abs(image_entropy(first) - image_entropy(second));
}

inline int select_grid(const Frame& first, const Frame& second, const GridThresholds& t = {}) {
  return grid_for_entropy_delta(entropy_delta(first, second), t);
}

inline bool is_supported_grid(int g) noexcept { return g == 8 || g == 16 || g == 32; }

/// g x g partition of the top-left cropped extent of a source frame.
struct BlockGrid {
  int g = 0;
  int source_width = 0;
  int source_height = 0;
  int cropped_width = 0;
  int cropped_height = 0;
  int block_width = 0;
  int block_height = 0;

  int cells() const noexcept { return g * g; }
  bool matches(const Image& frame) const noexcept {
    return frame.width() == source_width && frame.height() == source_height;
  }
  friend bool operator==(const BlockGrid&, const BlockGrid&) = default;
};

inline BlockGrid make_grid(int width, int height, int g) {
  if (g < 1) throw Error(ErrorCode::InvalidParameter, "grid size must be positive");
  if (width < g || height < g) {
    throw Error(ErrorCode::FrameTooSmall, std::to_string(width) + "x" + std::to_string(height) +
                                              " cannot hold a " + std::to_string(g) + "x" +
                                              std::to_string(g) + " grid");
  }
  BlockGrid grid;
  grid.g = g;
  grid.source_width = width;
  grid.source_height = height;
  grid.block_width = width / g;
  grid.block_height = height / g;
  grid.cropped_width = grid.block_width * g;
  grid.cropped_height = grid.block_height * g;
  return grid;
}

inline void check_cell(const BlockGrid& grid, int row, int col) {
  if (row < 0 || col < 0 || row >= grid.g || col >= grid.g) {
    throw Error(ErrorCode::IndexOutOfRange, "cell (" + std::to_string(row) + "," + std::to_string(col) +
                                                ") outside " + std::to_string(grid.g) + "x" +
                                                std::to_string(grid.g) + " grid");
  }
}

/// Pixels of cell (row, col), row-major.
inline Image extract_block(const Image& frame, const BlockGrid& grid, int row, int col) {
  check_cell(grid, row, col);
  if (frame.width() < grid.cropped_width || frame.height() < grid.cropped_height) {
    throw Error(ErrorCode::ShapeMismatch, "frame smaller than grid extent");
  }
  Image block(grid.block_width, grid.block_height);
  const int x0 = col * grid.block_width;
  const int y0 = row * grid.block_height;
  for (int y = 0; y < grid.block_height; ++y) {
    const auto src = frame.row(y0 + y).subspan(static_cast<std::size_t>(x0),
                                               static_cast<std::size_t>(grid.block_width));
    std::copy(src.begin(), src.end(), &block(0, y));
  }
  return block;
}

/// Writes `block` into cell (row, col) of `dest`.
inline void store_block(Image& dest, const BlockGrid& grid, int row, int col, const Image& block) {
  check_cell(grid, row, col);
  if (block.width() != grid.block_width || block.height() != grid.block_height) {
    throw Error(ErrorCode::ShapeMismatch, "block does not match grid cell size");
  }
  const int x0 = col * grid.block_width;
  const int y0 = row * grid.block_height;
  for (int y = 0; y < grid.block_height; ++y) {
    const auto src = block.row(y);
    std::copy(src.begin(), src.end(), &dest(x0, y0 + y));
  }
}

}  // namespace blockbg
