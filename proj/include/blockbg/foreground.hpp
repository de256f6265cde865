#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "blockbg/background.hpp"
#include "blockbg/error.hpp"
#include "blockbg/imaging.hpp"

namespace blockbg {

/// Binary per-pixel map with values in {0, 1}. Foreground masks have source
/// frame size; crop margins are always 0.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, std::uint8_t fill = 0)
      : width_(width), height_(height),
        bits_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill ? 1 : 0) {
    if (width < 0 || height < 0) throw Error(ErrorCode::InvalidParameter, "negative mask dimension");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  std::uint8_t operator()(int x, int y) const noexcept { return bits_[index(x, y)]; }
  void set(int x, int y, bool on) noexcept { bits_[index(x, y)] = on ? 1 : 0; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

using ForegroundMask = Mask;

/// Quantization shift used for background subtraction.
inline constexpr int kDefaultSubtractShift = 5;
inline constexpr int kDefaultMedianWindow = 3;

/// Quantized XOR change test evaluated under two bin alignments offset by
/// half a bin; a pixel counts as changed only if both alignments disagree.
/// Differences below 2^(q-1) never count, differences of 2^q or more always do.
inline bool xor_changed(std::uint8_t a, std::uint8_t b, int shift) noexcept {
  const int half = shift > 0 ? 1 << (shift - 1) : 0;
  const bool plain = ((a >> shift) ^ (b >> shift)) != 0;
  const bool offset = (((a + half) >> shift) ^ ((b + half) >> shift)) != 0;
  return plain && offset;
}

/// Raw change map between the background model and a frame, over the
/// cropped extent.
inline Mask subtract(const BackgroundModel& model, const Frame& frame, int shift = kDefaultSubtractShift) {
  if (shift < 0 || shift > 7) throw Error(ErrorCode::InvalidParameter, "subtraction shift must be in [0, 7]");
  if (!model.complete()) {
    throw Error(ErrorCode::ModelIncomplete, std::to_string(model.cells().size() - model.settled_count()) +
                                                " cell(s) unsettled; backfill before subtracting");
  }
  const auto& grid = model.grid();
  if (!grid.matches(frame)) {
    throw Error(ErrorCode::ShapeMismatch, "frame is " + std::to_string(frame.width()) + "x" +
                                              std::to_string(frame.height()) + ", model expects " +
                                              std::to_string(grid.source_width) + "x" +
                                              std::to_string(grid.source_height));
  }
  Mask change(frame.width(), frame.height());
  for (int y = 0; y < grid.cropped_height; ++y) {
    for (int x = 0; x < grid.cropped_width; ++x) {
      if (xor_changed(model.pixels()(x, y), frame(x, y), shift)) change.set(x, y, true);
    }
  }
  return change;
}

/// Binary median (majority vote) over an odd window. Border windows shrink to
/// their in-bounds pixels; an exact tie resolves to 0.
inline Mask median_filter_mask(const Mask& mask, int window = kDefaultMedianWindow) {
  if (window < 3 || window % 2 == 0) {
    throw Error(ErrorCode::InvalidParameter, "median window must be odd and >= 3, got " + std::to_string(window));
  }
  const int w = mask.width();
  const int h = mask.height();
  const int r = window / 2;
  // Summed-area table with a zero guard row/column.
  std::vector<int> sat(static_cast<std::size_t>(w + 1) * static_cast<std::size_t>(h + 1), 0);
  auto at = [&](int x, int y) -> int& { return sat[static_cast<std::size_t>(y) * static_cast<std::size_t>(w + 1) + static_cast<std::size_t>(x)]; };
  for (int y = 0; y < h; ++y) {
    int run = 0;
    for (int x = 0; x < w; ++x) {
      run += mask(x, y);
      at(x + 1, y + 1) = at(x + 1, y) + run;
    }
  }
  Mask out(w, h);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
      const int ones = at(x1 + 1, y1 + 1) - at(x0, y1 + 1) - at(x1 + 1, y0) + at(x0, y0);
      const int n = (x1 - x0 + 1) * (y1 - y0 + 1);
      if (2 * ones > n) out.set(x, y, true);
    }
  }
  return out;
}

inline void clear_margins(Mask& mask, const BlockGrid& grid) {
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (x >= grid.cropped_width || y >= grid.cropped_height) mask.set(x, y, false);
    }
  }
}

/// Subtraction followed by median noise cancellation.
inline ForegroundMask make_mask(const BackgroundModel& model, const Frame& frame,
                                int shift = kDefaultSubtractShift, int window = kDefaultMedianWindow) {
  auto mask = median_filter_mask(subtract(model, frame, shift), window);
  clear_margins(mask, model.grid());
  return mask;
}

/// Frame pixels where the mask is 1, zero elsewhere.
inline Frame apply_mask(const Frame& frame, const Mask& mask) {
  if (frame.width() != mask.width() || frame.height() != mask.height()) {
    throw Error(ErrorCode::ShapeMismatch, "mask and frame differ in size");
  }
  Frame out(frame.width(), frame.height());
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x)
      if (mask(x, y)) out(x, y) = frame(x, y);
  return out;
}

struct Box {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long area() const noexcept { return static_cast<long>(w) * h; }
  friend bool operator==(const Box&, const Box&) = default;
};

/// Intersection over union of two boxes; 0 when both are empty.
inline double iou(const Box& a, const Box& b) {
  const int ix0 = std::max(a.x, b.x), iy0 = std::max(a.y, b.y);
  const int ix1 = std::min(a.x + a.w, b.x + b.w), iy1 = std::min(a.y + a.h, b.y + b.h);
  const long inter = (ix1 > ix0 && iy1 > iy0) ? static_cast<long>(ix1 - ix0) * (iy1 - iy0) : 0;
  const long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

enum class Label { Unlabeled, Vehicle, NonVehicle };

constexpr std::string_view to_string(Label l) {
  switch (l) {
    case Label::Unlabeled: return "unlabeled";
    case Label::Vehicle: return "vehicle";
    case Label::NonVehicle: return "non-vehicle";
  }
  return "unknown";
}

struct DetectedObject {
  Box bbox;
  long area = 0;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  Label label = Label::Unlabeled;
  double score = 0.0;
};

inline std::size_t default_min_area(const BlockGrid& grid) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(grid.cropped_width) *
                                      static_cast<std::size_t>(grid.cropped_height) / 1000);
}

/// Per-pixel 8-connected component labels: 0 for background, 1.. for
/// components numbered in raster order of their first pixel.
inline std::vector<int> label_components(const Mask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<int> labels(mask.size(), 0);
  std::vector<std::pair<int, int>> stack;
  int next = 0;
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      const auto seed = static_cast<std::size_t>(sy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(sx);
      if (!mask(sx, sy) || labels[seed] != 0) continue;
      labels[seed] = ++next;
      stack.assign(1, {sx, sy});
      while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h || !mask(nx, ny)) continue;
            const auto idx = static_cast<std::size_t>(ny) * static_cast<std::size_t>(w) + static_cast<std::size_t>(nx);
            if (labels[idx] != 0) continue;
            labels[idx] = next;
            stack.emplace_back(nx, ny);
          }
        }
      }
    }
  }
  return labels;
}

/// 8-connected components of the 1-pixels, dropping those smaller than
/// `min_area`, ordered by (bbox.y, bbox.x).
inline std::vector<DetectedObject> connected_components(const Mask& mask, std::size_t min_area = 1) {
  const int w = mask.width();
  const auto labels = label_components(mask);
  const int count = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
  struct Acc {
    int x0 = std::numeric_limits<int>::max(), y0 = std::numeric_limits<int>::max(), x1 = -1, y1 = -1;
    long area = 0;
    double sum_x = 0.0, sum_y = 0.0;
  };
  std::vector<Acc> acc(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0) continue;
    auto& a = acc[static_cast<std::size_t>(labels[i] - 1)];
    const int x = static_cast<int>(i % static_cast<std::size_t>(w));
    const int y = static_cast<int>(i / static_cast<std::size_t>(w));
    a.x0 = std::min(a.x0, x), a.x1 = std::max(a.x1, x);
    a.y0 = std::min(a.y0, y), a.y1 = std::max(a.y1, y);
    ++a.area;
    a.sum_x += x;
    a.sum_y += y;
  }
  std::vector<DetectedObject> objects;
  for (const auto& a : acc) {
    if (static_cast<std::size_t>(a.area) < min_area) continue;
    DetectedObject obj;
    obj.bbox = {a.x0, a.y0, a.x1 - a.x0 + 1, a.y1 - a.y0 + 1};
    obj.area = a.area;
    obj.centroid_x = a.sum_x / static_cast<double>(a.area);
    obj.centroid_y = a.sum_y / static_cast<double>(a.area);
    objects.push_back(obj);
  }
  std::stable_sort(objects.begin(), objects.end(), [](const DetectedObject& a, const DetectedObject& b) {
    return a.bbox.y != b.bbox.y ? a.bbox.y < b.bbox.y : a.bbox.x < b.bbox.x;
  });
  return objects;
}

/// Masks are stored as PGM with 0 -> 0 and 1 -> 255.
inline void save_mask(const Mask& mask, const std::filesystem::path& path) {
  Image img(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) img(x, y) = mask(x, y) ? 255 : 0;
  save_frame(img, path);
}

inline Mask load_mask(const std::filesystem::path& path) {
  const auto img = load_frame(path, LoadOptions{1});
  Mask mask(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto v = img(x, y);
      if (v != 0 && v != 255) {
        throw Error(ErrorCode::MalformedHeader, path.string() + ": mask value " + std::to_string(v) +
                                                    " at (" + std::to_string(x) + "," + std::to_string(y) + ")");
      }
      mask.set(x, y, v == 255);
    }
  }
  return mask;
}

}  // namespace blockbg
