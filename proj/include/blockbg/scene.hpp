#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "blockbg/error.hpp"
#include "blockbg/foreground.hpp"
#include "blockbg/imaging.hpp"

namespace blockbg {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: draw i of stream s under seed k is
/// splitmix64(splitmix64(k ^ s) + i). Any draw can be produced independently,
/// so output never depends on evaluation order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept : key_(splitmix64(seed ^ stream)) {}

  std::uint64_t bits(std::uint64_t counter) const noexcept { return splitmix64(key_ + counter); }

  /// Uniform in the open interval (0, 1), 53-bit resolution.
  double uniform(std::uint64_t counter) const noexcept {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
};

/// Inverse standard-normal CDF, Acklam's rational approximation (relative
/// error below 1.2e-9 over (0, 1)).
inline double inverse_normal_cdf(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01, -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

struct Mover {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  int intensity = 255;
  int dx = 0;
  int dy = 0;

  Box at(int t) const noexcept { return {x + t * dx, y + t * dy, w, h}; }
};

struct SceneSpec {
  int width = 160;
  int height = 120;
  int frame_count = 60;
  double noise_sigma = 0.0;
  std::uint64_t seed = 42;
  std::vector<Mover> movers;

  // Background: base + gradient * x / (width - 1) + texture * value_noise(x, y)
  double bg_base = 100.0;
  double bg_gradient = 40.0;
  double bg_texture = 15.0;
  int bg_cell = 16;
};

inline void validate(const SceneSpec& s) {
  if (s.frame_count < 1) throw Error(ErrorCode::InvalidParameter, "scene needs at least one frame");
  if (s.width < 1 || s.height < 1) throw Error(ErrorCode::InvalidParameter, "scene dimensions must be positive");
  if (!(s.noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidParameter, "noise sigma must be >= 0");
  if (s.bg_cell < 1) throw Error(ErrorCode::InvalidParameter, "bg_cell must be >= 1");
  for (const auto& m : s.movers) {
    if (m.w < 1 || m.h < 1) throw Error(ErrorCode::InvalidParameter, "mover size must be positive");
    if (m.intensity < 0 || m.intensity > 255) throw Error(ErrorCode::InvalidParameter, "mover intensity outside [0,255]");
  }
}

/// Truth rectangle of one mover clipped to the frame. `truncated` marks
/// movers partly outside the frame.
struct TruthBox {
  Box box;
  bool truncated = false;
};

struct Scene {
  std::vector<Frame> frames;
  std::vector<Mask> truth_masks;
  std::vector<std::vector<TruthBox>> truth_boxes;
  Frame true_background;
};

namespace detail {

inline constexpr std::uint64_t kTextureStream = 0x7465787475726531ULL;
inline constexpr std::uint64_t kNoiseStream = 0x6e6f697365303031ULL;

inline double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

inline std::uint8_t to_pixel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

inline bool clip(const Box& b, int width, int height, Box& out) {
  const int x0 = std::max(0, b.x), y0 = std::max(0, b.y);
  const int x1 = std::min(width, b.x + b.w), y1 = std::min(height, b.y + b.h);
  if (x1 <= x0 || y1 <= y0) return false;
  out = {x0, y0, x1 - x0, y1 - y0};
  return true;
}

}  // namespace detail

/// Seeded value noise in [-1, 1]: hashed lattice values every `cell` pixels,
/// smoothstep-blended.
inline double value_noise(const CounterRng& rng, int x, int y, int cell) {
  const int ix = x / cell, iy = y / cell;
  const double fx = detail::smoothstep(static_cast<double>(x % cell) / cell);
  const double fy = detail::smoothstep(static_cast<double>(y % cell) / cell);
  auto lattice = [&](int i, int j) {
    const auto counter = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(j)) << 32) |
                         static_cast<std::uint32_t>(i);
    return 2.0 * rng.uniform(counter) - 1.0;
  };
  const double top = lattice(ix, iy) + (lattice(ix + 1, iy) - lattice(ix, iy)) * fx;
  const double bottom = lattice(ix, iy + 1) + (lattice(ix + 1, iy + 1) - lattice(ix, iy + 1)) * fx;
  return top + (bottom - top) * fy;
}

inline Frame make_background(const SceneSpec& spec) {
  const CounterRng rng(spec.seed, detail::kTextureStream);
  Frame bg(spec.width, spec.height);
  const double span = spec.width > 1 ? spec.width - 1 : 1;
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x)
      bg(x, y) = detail::to_pixel(spec.bg_base + spec.bg_gradient * x / span +
                                  spec.bg_texture * value_noise(rng, x, y, spec.bg_cell));
  return bg;
}

/// Renders every frame, its truth mask and truth boxes. Frame t stamps each
/// mover at start + t * velocity (later movers on top), then adds clamped
/// Gaussian noise.
inline Scene gen_scene(const SceneSpec& spec) {
  validate(spec);
  Scene scene;
  scene.true_background = make_background(spec);
  const CounterRng noise(spec.seed, detail::kNoiseStream);
  const auto area = static_cast<std::uint64_t>(spec.width) * static_cast<std::uint64_t>(spec.height);
  for (int t = 0; t < spec.frame_count; ++t) {
    Frame frame = scene.true_background;
    Mask truth(spec.width, spec.height);
    std::vector<TruthBox> boxes;
    for (const auto& m : spec.movers) {
      const Box full = m.at(t);
      Box vis;
      if (!detail::clip(full, spec.width, spec.height, vis)) continue;
      for (int y = vis.y; y < vis.y + vis.h; ++y) {
        for (int x = vis.x; x < vis.x + vis.w; ++x) {
          frame(x, y) = static_cast<std::uint8_t>(m.intensity);
          truth.set(x, y, true);
        }
      }
      boxes.push_back({vis, !(vis == full)});
    }
    if (spec.noise_sigma > 0.0) {
      const std::uint64_t base = static_cast<std::uint64_t>(t) * area;
      auto px = frame.pixels();
      for (std::size_t i = 0; i < px.size(); ++i) {
        const double z = inverse_normal_cdf(noise.uniform(base + i));
        px[i] = detail::to_pixel(px[i] + spec.noise_sigma * z);
      }
    }
    scene.frames.push_back(std::move(frame));
    scene.truth_masks.push_back(std::move(truth));
    scene.truth_boxes.push_back(std::move(boxes));
  }
  return scene;
}

/// Parses `key=value` scene text. Keys: width, height, frames, sigma, seed,
/// bg_base, bg_gradient, bg_texture, bg_cell, and repeated
/// `mover=x,y,w,h,intensity,dx,dy`. `#` starts a comment.
inline SceneSpec parse_scene_spec(const std::string& text) {
  SceneSpec spec;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::InvalidParameter, "scene line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      std::size_t used = 0;
      auto whole = [&](auto parsed) {
        if (used != value.size()) fail("trailing characters in '" + value + "'");
        return parsed;
      };
      if (key == "width") spec.width = whole(std::stoi(value, &used));
      else if (key == "height") spec.height = whole(std::stoi(value, &used));
      else if (key == "frames") spec.frame_count = whole(std::stoi(value, &used));
      else if (key == "sigma") spec.noise_sigma = whole(std::stod(value, &used));
      else if (key == "seed") spec.seed = whole(std::stoull(value, &used));
      else if (key == "bg_base") spec.bg_base = whole(std::stod(value, &used));
      else if (key == "bg_gradient") spec.bg_gradient = whole(std::stod(value, &used));
      else if (key == "bg_texture") spec.bg_texture = whole(std::stod(value, &used));
      else if (key == "bg_cell") spec.bg_cell = whole(std::stoi(value, &used));
      else if (key == "mover") {
        std::vector<int> f;
        std::istringstream fields(value);
        std::string item;
        while (std::getline(fields, item, ',')) {
          item = trim(item);
          std::size_t n = 0;
          f.push_back(std::stoi(item, &n));
          if (n != item.size()) fail("bad mover field '" + item + "'");
        }
        if (f.size() != 7) fail("mover needs x,y,w,h,intensity,dx,dy");
        spec.movers.push_back({f[0], f[1], f[2], f[3], f[4], f[5], f[6]});
      } else {
        fail("unknown key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      fail("cannot parse value '" + value + "' for " + key);
    }
  }
  validate(spec);
  return spec;
}

inline SceneSpec load_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ReadFailed, "cannot open scene file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scene_spec(buf.str());
}

/// Reference scene: two 12x8 movers entering from off-frame on a textured
/// background. `sigma` selects the noise level.
inline SceneSpec reference_scene(double sigma) {
  SceneSpec s;
  s.width = 160;
  s.height = 120;
  s.frame_count = 60;
  s.noise_sigma = sigma;
  s.seed = 42;
  s.movers = {{-16, 30, 12, 8, 220, 2, 0}, {162, 20, 12, 8, 40, -1, 1}};
  return s;
}

}  // namespace blockbg
