#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <tuple>
#include <vector>

#include "blockbg/error.hpp"
#include "blockbg/foreground.hpp"
#include "blockbg/scene.hpp"

namespace blockbg {

struct MetricsReport {
  std::size_t pixel_tp = 0;
  std::size_t pixel_fp = 0;
  std::size_t pixel_fn = 0;
  double pixel_precision = 0.0;
  double pixel_recall = 0.0;
  double pixel_f1 = 0.0;
  /// Mean per-frame mask IoU over frames where prediction or truth is non-empty.
  double mean_iou = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  /// Object-level TP / (TP + FP + FN).
  double detection_accuracy = 0.0;
};

namespace detail {

// 0/0 counts as perfect only when the opposite error count is also zero,
// which keeps precision and recall exchangeable under a pred/truth swap.
inline double ratio(std::size_t num, std::size_t den, std::size_t other_error) {
  if (den == 0) return other_error == 0 ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

inline long intersection_area(const Box& a, const Box& b) {
  const int ix0 = std::max(a.x, b.x), iy0 = std::max(a.y, b.y);
  const int ix1 = std::min(a.x + a.w, b.x + b.w), iy1 = std::min(a.y + a.h, b.y + b.h);
  return (ix1 > ix0 && iy1 > iy0) ? static_cast<long>(ix1 - ix0) * (iy1 - iy0) : 0;
}

}  // namespace detail

struct FrameMatch {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// Greedy one-to-one matching in descending IoU order; only pairs with
/// IoU >= threshold are admitted. Truncated truth boxes are don't-care: a
/// prediction matched to one, or lying at least half inside one, is neither
/// TP nor FP, and an unmatched truncated box is not a miss.
inline FrameMatch match_boxes(std::span<const Box> preds, std::span<const TruthBox> truths,
                              double iou_threshold) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < preds.size(); ++i)
    for (std::size_t j = 0; j < truths.size(); ++j)
      if (const double v = iou(preds[i], truths[j].box); v >= iou_threshold && v > 0.0) pairs.emplace_back(v, i, j);
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
  std::vector<int> pred_match(preds.size(), -1);
  std::vector<char> truth_used(truths.size(), 0);
  for (const auto& [v, i, j] : pairs) {
    if (pred_match[i] >= 0 || truth_used[j]) continue;
    pred_match[i] = static_cast<int>(j);
    truth_used[j] = 1;
  }
  FrameMatch m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (pred_match[i] >= 0) {
      if (!truths[static_cast<std::size_t>(pred_match[i])].truncated) ++m.tp;
      continue;
    }
    const bool inside_ignored = std::any_of(truths.begin(), truths.end(), [&](const TruthBox& t) {
      return t.truncated && 2 * detail::intersection_area(preds[i], t.box) >= preds[i].area();
    });
    if (!inside_ignored) ++m.fp;
  }
  for (std::size_t j = 0; j < truths.size(); ++j)
    if (!truth_used[j] && !truths[j].truncated) ++m.fn;
  return m;
}

inline MetricsReport evaluate(std::span<const Mask> pred_masks, std::span<const std::vector<Box>> pred_boxes,
                              std::span<const Mask> truth_masks,
                              std::span<const std::vector<TruthBox>> truth_boxes, double iou_threshold = 0.5) {
  const std::size_t n = truth_masks.size();
  if (pred_masks.size() != n || pred_boxes.size() != n || truth_boxes.size() != n) {
    throw Error(ErrorCode::InvalidParameter, "prediction and truth sequences differ in length");
  }
  MetricsReport r;
  double iou_sum = 0.0;
  std::size_t iou_frames = 0;
  for (std::size_t f = 0; f < n; ++f) {
    const auto& pm = pred_masks[f];
    const auto& tm = truth_masks[f];
    if (pm.width() != tm.width() || pm.height() != tm.height()) {
      throw Error(ErrorCode::ShapeMismatch, "mask size mismatch at frame " + std::to_string(f));
    }
    std::size_t tp = 0, fp = 0, fn = 0;
    const auto pb = pm.bits();
    const auto tb = tm.bits();
    for (std::size_t i = 0; i < pb.size(); ++i) {
      tp += pb[i] & tb[i];
      fp += pb[i] & (tb[i] ^ 1);
      fn += (pb[i] ^ 1) & tb[i];
    }
    r.pixel_tp += tp;
    r.pixel_fp += fp;
    r.pixel_fn += fn;
    if (tp + fp + fn > 0) {
      iou_sum += static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
      ++iou_frames;
    }
    const auto m = match_boxes(pred_boxes[f], truth_boxes[f], iou_threshold);
    r.tp += m.tp;
    r.fp += m.fp;
    r.fn += m.fn;
  }
  r.pixel_precision = detail::ratio(r.pixel_tp, r.pixel_tp + r.pixel_fp, r.pixel_fn);
  r.pixel_recall = detail::ratio(r.pixel_tp, r.pixel_tp + r.pixel_fn, r.pixel_fp);
  const double pr = r.pixel_precision + r.pixel_recall;
  r.pixel_f1 = pr > 0.0 ? 2.0 * r.pixel_precision * r.pixel_recall / pr : 0.0;
  r.mean_iou = iou_frames > 0 ? iou_sum / static_cast<double>(iou_frames) : 1.0;
  const std::size_t objects = r.tp + r.fp + r.fn;
  r.detection_accuracy = objects > 0 ? static_cast<double>(r.tp) / static_cast<double>(objects) : 1.0;
  return r;
}

}  // namespace blockbg
