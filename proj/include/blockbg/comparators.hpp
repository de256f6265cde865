#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blockbg/blocks.hpp"
#include "blockbg/dct.hpp"
#include "blockbg/error.hpp"
#include "blockbg/imaging.hpp"

namespace blockbg {

enum class Method { AbsDiff, Entropy, Xor, Dct };

inline constexpr Method kAllMethods[] = {Method::AbsDiff, Method::Entropy, Method::Xor, Method::Dct};

constexpr std::string_view to_string(Method m) {
  switch (m) {
    case Method::AbsDiff: return "absdiff";
    case Method::Entropy: return "entropy";
    case Method::Xor: return "xor";
    case Method::Dct: return "dct";
  }
  return "unknown";
}

inline std::optional<Method> parse_method(std::string_view name) {
  for (const auto m : kAllMethods)
    if (to_string(m) == name) return m;
  return std::nullopt;
}

/// Static-verdict thresholds used when none is given, in each method's score
/// units. Tuned on the synthetic noisy reference scene.
constexpr double default_threshold(Method m) {
  switch (m) {
    case Method::AbsDiff: return 6.0;
    case Method::Entropy: return 0.5;
    case Method::Xor: return 0.75;
    case Method::Dct: return 6.0;
  }
  return 0.0;
}

inline constexpr int kDefaultXorShift = 3;
inline constexpr int kDefaultDctKeep = 10;

struct ComparatorConfig {
  Method method = Method::Dct;
  double threshold = default_threshold(Method::Dct);
  int xor_shift = kDefaultXorShift;
  int dct_keep = kDefaultDctKeep;

  static ComparatorConfig defaults(Method m) {
    ComparatorConfig cfg;
    cfg.method = m;
    cfg.threshold = default_threshold(m);
    return cfg;
  }
};

inline void validate(const ComparatorConfig& cfg) {
  if (!(cfg.threshold >= 0.0) || !std::isfinite(cfg.threshold)) {
    throw Error(ErrorCode::InvalidParameter, "threshold must be a finite value >= 0");
  }
  if (cfg.xor_shift < 0 || cfg.xor_shift > 7) {
    throw Error(ErrorCode::InvalidParameter, "xor shift must be in [0, 7]");
  }
  if (cfg.dct_keep < 1) throw Error(ErrorCode::InvalidParameter, "dct coefficient count must be >= 1");
}

namespace detail {

inline void check_same_shape(const Image& a, const Image& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                              " vs " + std::to_string(b.width()) + "x" +
                                              std::to_string(b.height()));
  }
  if (a.empty()) throw Error(ErrorCode::EmptyRegion, "comparison of empty blocks");
}

}  // namespace detail

/// Mean absolute pixel difference, in [0, 255].
inline double absdiff_score(const Image& a, const Image& b) {
  detail::check_same_shape(a, b);
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    sum += static_cast<std::uint64_t>(std::abs(int{pa[i]} - int{pb[i]}));
  }
  return static_cast<double>(sum) / static_cast<double>(pa.size());
}

/// |H(a) - H(b)| in bits, in [0, 8]. Blind to pixel rearrangement.
inline double entropy_score(const Image& a, const Image& b) {
  detail::check_same_shape(a, b);
  return std::abs(image_entropy(a) - image_entropy(b));
}

/// Fraction of pixels whose intensities differ once the low `shift` bits are
/// dropped, i.e. (a >> q) ^ (b >> q) != 0.
inline double xor_score(const Image& a, const Image& b, int shift) {
  detail::check_same_shape(a, b);
  if (shift < 0 || shift > 7) throw Error(ErrorCode::InvalidParameter, "xor shift must be in [0, 7]");
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  std::size_t changed = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    changed += ((pa[i] >> shift) ^ (pb[i] >> shift)) != 0;
  }
  return static_cast<double>(changed) / static_cast<double>(pa.size());
}

inline int clamp_keep(int keep, const Image& block) {
  return std::clamp(keep, 1, block.width() * block.height());
}

/// First `keep` zigzag coefficients of dct2(block), computing only the
/// low-frequency corner the scan reaches. Summation order matches dct2, so
/// results are bit-identical to zigzag_take(dct2(block), keep).
inline std::vector<double> dct_features(const Image& block, int keep) {
  const int w = block.width();
  const int h = block.height();
  if (w < 1 || h < 1) throw Error(ErrorCode::EmptyRegion, "dct of an empty block");
  if (keep < 1 || keep > w * h) {
    throw Error(ErrorCode::InvalidParameter,
                "zigzag count " + std::to_string(keep) + " outside [1, " + std::to_string(w * h) + "]");
  }
  // Smallest diagonal index d whose prefix of the scan holds `keep` entries.
  int reach = 0;
  for (int d = 0, seen = 0;; ++d) {
    seen += std::min(d, h - 1) - std::max(0, d - (w - 1)) + 1;
    if (seen >= keep) {
      reach = d;
      break;
    }
  }
  const int umax = std::min(reach, w - 1);
  const int vmax = std::min(reach, h - 1);
  const auto& bw = detail::dct_basis(w);
  const auto& bh = detail::dct_basis(h);

  Matrix partial(h, umax + 1);
  for (int y = 0; y < h; ++y) {
    const auto px = block.row(y);
    for (int u = 0; u <= umax; ++u) {
      const double* basis = &bw[static_cast<std::size_t>(u * w)];
      double acc = 0.0;
      for (int x = 0; x < w; ++x) acc += basis[x] * px[static_cast<std::size_t>(x)];
      partial(y, u) = acc;
    }
  }
  Matrix corner(vmax + 1, umax + 1);
  for (int v = 0; v <= vmax; ++v) {
    const double* basis = &bh[static_cast<std::size_t>(v * h)];
    for (int y = 0; y < h; ++y) {
      const double b = basis[y];
      for (int u = 0; u <= umax; ++u) corner(v, u) += b * partial(y, u);
    }
  }
  return zigzag_take(corner, keep);
}

/// Mean absolute difference of the first `keep` zigzag DCT coefficients.
inline double dct_score(const Image& a, const Image& b, int keep) {
  detail::check_same_shape(a, b);
  const auto fa = dct_features(a, keep);
  const auto fb = dct_features(b, keep);
  double sum = 0.0;
  for (std::size_t k = 0; k < fa.size(); ++k) sum += std::abs(fa[k] - fb[k]);
  return sum / static_cast<double>(fa.size());
}

enum class Verdict { Static, Dynamic };

struct Comparison {
  double score = 0.0;
  Verdict verdict = Verdict::Dynamic;
};

inline double score(const Image& a, const Image& b, const ComparatorConfig& cfg) {
  switch (cfg.method) {
    case Method::AbsDiff: return absdiff_score(a, b);
    case Method::Entropy: return entropy_score(a, b);
    case Method::Xor: return xor_score(a, b, cfg.xor_shift);
    case Method::Dct: return dct_score(a, b, clamp_keep(cfg.dct_keep, a));
  }
  return 0.0;
}

/// Static iff the configured score is strictly below the threshold.
inline Comparison compare(const Image& a, const Image& b, const ComparatorConfig& cfg) {
  validate(cfg);
  Comparison c;
  c.score = score(a, b, cfg);
  c.verdict = c.score < cfg.threshold ? Verdict::Static : Verdict::Dynamic;
  return c;
}

}  // namespace blockbg
