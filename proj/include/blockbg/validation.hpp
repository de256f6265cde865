#pragma once

#include <algorithm>
#include <vector>

#include "blockbg/error.hpp"
#include "blockbg/foreground.hpp"
#include "blockbg/imaging.hpp"

namespace blockbg {

struct ClassifierVerdict {
  Label label = Label::NonVehicle;
  double score = 0.0;
};

/// Decides whether a detected object is a vehicle. `object_image` is the
/// masked frame cropped to the object's bounding box.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ClassifierVerdict classify(const Image& object_image, const DetectedObject& object) const = 0;
};

struct HeuristicParams {
  double aspect_min = 0.5;
  double aspect_max = 4.0;
  double fill_min = 0.4;
  double area_min_frac = 0.001;
  double area_max_frac = 0.5;
};

inline void validate(const HeuristicParams& p) {
  if (!(p.aspect_min > 0.0 && p.aspect_min <= p.aspect_max)) {
    throw Error(ErrorCode::InvalidParameter, "need 0 < aspect_min <= aspect_max");
  }
  if (!(p.fill_min > 0.0 && p.fill_min <= 1.0)) throw Error(ErrorCode::InvalidParameter, "need 0 < fill_min <= 1");
  if (!(p.area_min_frac > 0.0 && p.area_min_frac < p.area_max_frac && p.area_max_frac <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "need 0 < area_min_frac < area_max_frac <= 1");
  }
}

namespace detail {

// Sub-scores are 1 well inside a band and ramp linearly to 0 across the 10%
// of the edge value nearest the edge.
inline double lower_edge_score(double v, double lo) {
  const double ramp = 0.1 * lo;
  return ramp > 0.0 ? std::clamp((v - lo) / ramp, 0.0, 1.0) : 1.0;
}

inline double upper_edge_score(double v, double hi) {
  const double ramp = 0.1 * hi;
  return ramp > 0.0 ? std::clamp((hi - v) / ramp, 0.0, 1.0) : 1.0;
}

inline double band_score(double v, double lo, double hi) {
  return std::min(lower_edge_score(v, lo), upper_edge_score(v, hi));
}

}  // namespace detail

/// Geometric vehicle test on bbox aspect, fill ratio and relative area.
inline ClassifierVerdict validate(const Image& /*object_image*/, const DetectedObject& object,
                                  const HeuristicParams& params, double frame_area) {
  const auto& b = object.bbox;
  if (b.w <= 0 || b.h <= 0 || frame_area <= 0.0) return {Label::NonVehicle, 0.0};
  const double aspect = static_cast<double>(b.w) / b.h;
  const double fill = static_cast<double>(object.area) / static_cast<double>(b.area());
  const double rel_area = static_cast<double>(object.area) / frame_area;

  const bool accepted = aspect >= params.aspect_min && aspect <= params.aspect_max &&
                        fill >= params.fill_min && rel_area >= params.area_min_frac &&
                        rel_area <= params.area_max_frac;
  if (!accepted) return {Label::NonVehicle, 0.0};
  const double score = detail::band_score(aspect, params.aspect_min, params.aspect_max) *
                       detail::lower_edge_score(fill, params.fill_min) *
                       detail::band_score(rel_area, params.area_min_frac, params.area_max_frac);
  return {Label::Vehicle, score};
}

class HeuristicClassifier final : public Classifier {
 public:
  HeuristicClassifier(HeuristicParams params, double frame_area) : params_(params), frame_area_(frame_area) {
    blockbg::validate(params_);
  }

  ClassifierVerdict classify(const Image& object_image, const DetectedObject& object) const override {
    return validate(object_image, object, params_, frame_area_);
  }

 private:
  HeuristicParams params_;
  double frame_area_;
};

/// Labels everything a vehicle with full confidence.
class AcceptAllClassifier final : public Classifier {
 public:
  ClassifierVerdict classify(const Image&, const DetectedObject&) const override { return {Label::Vehicle, 1.0}; }
};

inline Image crop(const Image& frame, const Box& box) {
  const int x0 = std::clamp(box.x, 0, frame.width());
  const int y0 = std::clamp(box.y, 0, frame.height());
  const int x1 = std::clamp(box.x + box.w, 0, frame.width());
  const int y1 = std::clamp(box.y + box.h, 0, frame.height());
  Image out(x1 - x0, y1 - y0);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) out(x - x0, y - y0) = frame(x, y);
  return out;
}

/// Labels each object independently; order is preserved.
inline std::vector<DetectedObject> classify_all(std::vector<DetectedObject> objects, const Frame& masked_frame,
                                                const Classifier& classifier) {
  for (auto& obj : objects) {
    const auto verdict = classifier.classify(crop(masked_frame, obj.bbox), obj);
    obj.label = verdict.label;
    obj.score = verdict.score;
  }
  return objects;
}

}  // namespace blockbg
