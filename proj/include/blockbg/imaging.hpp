#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "blockbg/error.hpp"

namespace blockbg {

/// 8-bit grayscale raster, row-major. Used for whole frames as well as for
/// block-sized pixel regions.
class Image {
 public:
  Image() = default;

  Image(int width, int height, std::uint8_t fill = 0)
      : width_(checked_dim(width)), height_(checked_dim(height)),
        pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  Image(int width, int height, std::vector<std::uint8_t> pixels)
      : width_(checked_dim(width)), height_(checked_dim(height)), pixels_(std::move(pixels)) {
    if (pixels_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
      throw Error(ErrorCode::ShapeMismatch,
                  "pixel count " + std::to_string(pixels_.size()) + " != " +
                      std::to_string(width_) + "x" + std::to_string(height_));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t operator()(int x, int y) const noexcept { return pixels_[index(x, y)]; }
  std::uint8_t& operator()(int x, int y) noexcept { return pixels_[index(x, y)]; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }
  std::span<const std::uint8_t> row(int y) const noexcept {
    return std::span<const std::uint8_t>(pixels_).subspan(index(0, y), static_cast<std::size_t>(width_));
  }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  static int checked_dim(int v) {
    if (v < 0) throw Error(ErrorCode::InvalidParameter, "negative image dimension");
    return v;
  }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

using Frame = Image;

inline constexpr int kGrayLevels = 256;
inline constexpr int kMinFrameDimension = 16;

struct LoadOptions {
  int min_dimension = kMinFrameDimension;
};

namespace detail {

class PnmHeaderReader {
 public:
  PnmHeaderReader(const std::vector<std::uint8_t>& bytes, const std::string& origin)
      : bytes_(bytes), origin_(origin) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint(const char* field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw Error(ErrorCode::MalformedHeader, origin_ + ": missing " + field);
    }
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000) throw Error(ErrorCode::MalformedHeader, origin_ + ": " + field + " out of range");
      ++pos_;
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from the raster.
  void expect_single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw Error(ErrorCode::MalformedHeader, origin_ + ": no whitespace after maxval");
    }
    ++pos_;
  }

  std::size_t pos() const noexcept { return pos_; }
  void advance(std::size_t n) noexcept { pos_ += n; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

inline std::uint8_t bt601_luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  return static_cast<std::uint8_t>((77u * r + 150u * g + 29u * b + 128u) >> 8);
}

}  // namespace detail

/// Decodes binary PGM (P5) verbatim or binary PPM (P6) through integer BT.601
/// luma. Only maxval 255 is accepted.
inline Frame decode_pnm(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>",
                        const LoadOptions& options = {}) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error(ErrorCode::MalformedHeader, origin + ": expected P5 or P6 magic");
  }
  const bool color = bytes[1] == '6';
  detail::PnmHeaderReader reader(bytes, origin);
  reader.advance(2);
  const long width = reader.read_uint("width");
  const long height = reader.read_uint("height");
  const long maxval = reader.read_uint("maxval");
  if (width == 0 || height == 0) {
    throw Error(ErrorCode::MalformedHeader, origin + ": zero dimension");
  }
  if (maxval != 255) {
    throw Error(ErrorCode::UnsupportedMaxval, origin + ": maxval " + std::to_string(maxval) + " (need 255)");
  }
  reader.expect_single_space();
  if (width < options.min_dimension || height < options.min_dimension) {
    throw Error(ErrorCode::FrameTooSmall, origin + ": " + std::to_string(width) + "x" +
                                              std::to_string(height) + " below minimum " +
                                              std::to_string(options.min_dimension));
  }
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t needed = count * (color ? 3 : 1);
  if (bytes.size() - reader.pos() < needed) {
    throw Error(ErrorCode::TruncatedPayload, origin + ": expected " + std::to_string(needed) +
                                                 " raster bytes, found " +
                                                 std::to_string(bytes.size() - reader.pos()));
  }
  std::vector<std::uint8_t> pixels(count);
  const auto* src = bytes.data() + reader.pos();
  if (color) {
    for (std::size_t i = 0; i < count; ++i) {
      pixels[i] = detail::bt601_luma(src[3 * i], src[3 * i + 1], src[3 * i + 2]);
    }
  } else {
    std::copy_n(src, count, pixels.begin());
  }
  return Frame(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

inline Frame load_frame(const std::filesystem::path& path, const LoadOptions& options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ReadFailed, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_pnm(bytes, path.string(), options);
}

inline std::vector<std::uint8_t> encode_pgm(const Image& image) {
  const std::string header =
      "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels().begin(), image.pixels().end());
  return out;
}

inline void save_frame(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::WriteFailed, "cannot open " + path.string() + " for writing");
  const auto bytes = encode_pgm(image);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::WriteFailed, "short write to " + path.string());
}

/// printf-style file pattern with exactly one `%d` / `%0Nd` conversion.
class SequencePattern {
 public:
  explicit SequencePattern(const std::string& pattern) : pattern_(pattern) {
    const auto pct = pattern.find('%');
    if (pct == std::string::npos) throw Error(ErrorCode::InvalidParameter, "pattern lacks %d: " + pattern);
    std::size_t i = pct + 1;
    while (i < pattern.size() && std::isdigit(static_cast<unsigned char>(pattern[i]))) ++i;
    if (i >= pattern.size() || pattern[i] != 'd') {
      throw Error(ErrorCode::InvalidParameter, "pattern must use %d or %0Nd: " + pattern);
    }
    prefix_ = pattern.substr(0, pct);
    suffix_ = pattern.substr(i + 1);
    if (suffix_.find('%') != std::string::npos) {
      throw Error(ErrorCode::InvalidParameter, "pattern has more than one conversion: " + pattern);
    }
    spec_ = pattern.substr(pct, i + 1 - pct);
  }

  std::string format(long index) const {
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), (spec_.substr(0, spec_.size() - 1) + "ld").c_str(), index);
    return prefix_ + buf.data() + suffix_;
  }

  /// Index encoded in `name`, or -1 if the name does not match exactly.
  long match(const std::string& name) const {
    if (name.size() <= prefix_.size() + suffix_.size()) return -1;
    if (name.compare(0, prefix_.size(), prefix_) != 0) return -1;
    if (name.compare(name.size() - suffix_.size(), suffix_.size(), suffix_) != 0) return -1;
    const auto digits = name.substr(prefix_.size(), name.size() - prefix_.size() - suffix_.size());
    if (digits.size() > 12 || !std::all_of(digits.begin(), digits.end(),
                                           [](unsigned char c) { return std::isdigit(c); })) {
      return -1;
    }
    const long index = std::stol(digits);
    return format(index) == name ? index : -1;
  }

 private:
  std::string pattern_;
  std::string prefix_;
  std::string suffix_;
  std::string spec_;
};

inline constexpr const char* kDefaultSequencePattern = "%06d.pgm";

/// Paths of the consecutive run of matching files that starts at the
/// smallest index present, keyed by file index.
inline std::vector<std::pair<long, std::filesystem::path>> sequence_paths(
    const std::filesystem::path& dir, const std::string& pattern = kDefaultSequencePattern) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::ReadFailed, "not a directory: " + dir.string());
  const SequencePattern pat(pattern);
  std::map<long, fs::path> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const long idx = pat.match(entry.path().filename().string());
    if (idx >= 0) found.emplace(idx, entry.path());
  }
  std::vector<std::pair<long, fs::path>> run;
  for (const auto& [idx, path] : found) {
    if (!run.empty() && idx != run.back().first + 1) break;
    run.emplace_back(idx, path);
  }
  return run;
}

inline std::vector<Frame> load_sequence(const std::filesystem::path& dir,
                                        const std::string& pattern = kDefaultSequencePattern,
                                        const LoadOptions& options = {}) {
  const auto paths = sequence_paths(dir, pattern);
  if (paths.size() < 2) {
    throw Error(ErrorCode::SequenceTooShort, dir.string() + ": " + std::to_string(paths.size()) +
                                                 " frame(s) matching " + pattern + ", need at least 2");
  }
  std::vector<Frame> frames;
  frames.reserve(paths.size());
  for (const auto& [idx, path] : paths) {
    frames.push_back(load_frame(path, options));
    if (!frames.back().same_shape(frames.front())) {
      throw Error(ErrorCode::InconsistentSequence,
                  "frame index " + std::to_string(idx) + " is " + std::to_string(frames.back().width()) +
                      "x" + std::to_string(frames.back().height()) + ", expected " +
                      std::to_string(frames.front().width()) + "x" + std::to_string(frames.front().height()));
    }
  }
  return frames;
}

enum class Prefilter { None, Median3 };

/// 3x3 median; border windows shrink to their in-bounds pixels and even-sized
/// windows take the lower median.
inline Image median3(const Image& src) {
  Image out(src.width(), src.height());
  std::array<std::uint8_t, 9> window{};
  for (int y = 0; y < src.height(); ++y) {
    const int y0 = std::max(0, y - 1), y1 = std::min(src.height() - 1, y + 1);
    for (int x = 0; x < src.width(); ++x) {
      const int x0 = std::max(0, x - 1), x1 = std::min(src.width() - 1, x + 1);
      std::size_t n = 0;
      for (int yy = y0; yy <= y1; ++yy)
        for (int xx = x0; xx <= x1; ++xx) window[n++] = src(xx, yy);
      const auto mid = window.begin() + static_cast<std::ptrdiff_t>((n - 1) / 2);
      std::nth_element(window.begin(), mid, window.begin() + static_cast<std::ptrdiff_t>(n));
      out(x, y) = *mid;
    }
  }
  return out;
}

inline Image prefilter(const Image& frame, Prefilter kind) {
  switch (kind) {
    case Prefilter::None: return frame;
    case Prefilter::Median3: return median3(frame);
  }
  return frame;
}

}  // namespace blockbg
