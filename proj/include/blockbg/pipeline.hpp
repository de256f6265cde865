#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "blockbg/background.hpp"
#include "blockbg/blocks.hpp"
#include "blockbg/comparators.hpp"
#include "blockbg/foreground.hpp"
#include "blockbg/imaging.hpp"
#include "blockbg/parallel.hpp"
#include "blockbg/validation.hpp"

namespace blockbg {

/// Everything downstream of the comparator that shapes a detection run.
struct PipelineParams {
  /// 0 selects the grid from the entropy delta of the first two frames.
  int grid = 0;
  GridThresholds grid_thresholds;
  Prefilter prefilter = Prefilter::None;
  int subtract_shift = kDefaultSubtractShift;
  int median_window = kDefaultMedianWindow;
  /// 0 means 0.1% of the cropped frame area.
  std::size_t min_area = 0;
  bool validate = true;
  HeuristicParams heuristic;
  std::size_t max_frames = kDefaultMaxFrames;
  std::size_t rebuild_every = 300;
  int jobs = 1;
};

inline void validate(const PipelineParams& p) {
  if (p.grid != 0 && !is_supported_grid(p.grid)) {
    throw Error(ErrorCode::InvalidParameter, "grid must be auto, 8, 16 or 32");
  }
  validate(p.grid_thresholds);
  if (p.subtract_shift < 0 || p.subtract_shift > 7) {
    throw Error(ErrorCode::InvalidParameter, "subtraction shift must be in [0, 7]");
  }
  if (p.median_window < 3 || p.median_window % 2 == 0) {
    throw Error(ErrorCode::InvalidParameter, "median window must be odd and >= 3");
  }
  if (p.max_frames < 2) throw Error(ErrorCode::InvalidParameter, "frame budget must be >= 2");
  if (p.rebuild_every < 1) throw Error(ErrorCode::InvalidParameter, "rebuild period must be >= 1");
  validate(p.heuristic);
}

inline BlockGrid choose_grid(std::span<const Frame> frames, const PipelineParams& p) {
  if (frames.size() < 2) throw Error(ErrorCode::SequenceTooShort, "need at least 2 frames to choose a grid");
  const int g = p.grid != 0 ? p.grid : select_grid(frames[0], frames[1], p.grid_thresholds);
  return make_grid(frames[0].width(), frames[0].height(), g);
}

inline std::size_t effective_min_area(const BlockGrid& grid, const PipelineParams& p) {
  return p.min_area > 0 ? p.min_area : default_min_area(grid);
}

inline std::unique_ptr<Classifier> make_classifier(const BlockGrid& grid, const PipelineParams& p) {
  if (!p.validate) return std::make_unique<AcceptAllClassifier>();
  const double area = static_cast<double>(grid.cropped_width) * grid.cropped_height;
  return std::make_unique<HeuristicClassifier>(p.heuristic, area);
}

struct FrameDetections {
  ForegroundMask mask;
  std::vector<DetectedObject> objects;
};

/// Mask, components and verdicts for one frame against a complete model.
inline FrameDetections detect_frame(const BackgroundModel& model, const Frame& frame, const PipelineParams& p,
                                    const Classifier& classifier) {
  FrameDetections out;
  out.mask = make_mask(model, frame, p.subtract_shift, p.median_window);
  auto objects = connected_components(out.mask, effective_min_area(model.grid(), p));
  out.objects = classify_all(std::move(objects), apply_mask(frame, out.mask), classifier);
  return out;
}

/// Detection over every frame against one fixed, complete model.
inline std::vector<FrameDetections> detect_all(const BackgroundModel& model, std::span<const Frame> frames,
                                               const PipelineParams& p) {
  validate(p);
  const auto classifier = make_classifier(model.grid(), p);
  std::vector<FrameDetections> out(frames.size());
  parallel_for(frames.size(), p.jobs, [&](std::size_t i) {
    out[i] = detect_frame(model, prefilter(frames[i], p.prefilter), p, *classifier);
  });
  return out;
}

/// A model segment: the raw build (possibly partial) and the backfilled
/// model used for subtraction, valid from `start` onwards.
struct ModelSegment {
  std::size_t start = 0;
  BackgroundModel raw;
  BackgroundModel model;
  bool swapped = true;
};

struct DetectionRun {
  BlockGrid grid;
  std::vector<ModelSegment> segments;
  std::vector<FrameDetections> frames;
};

inline ModelSegment backfilled_segment(std::size_t start, BackgroundModel raw, std::span<const Frame> frames,
                                       bool swapped) {
  const std::size_t last = std::min(frames.size() - 1, start + std::max<std::size_t>(raw.frames_consumed, 1) - 1);
  ModelSegment seg{start, raw, backfill(raw, frames[last]), swapped};
  return seg;
}

/// End-to-end detection over a frame sequence. The model is built from the
/// first frames and rebuilt every `rebuild_every` frames from the stream
/// starting at that frame, keeping the old model when the rebuild covers
/// less. Unsettled cells are backfilled from the last frame a build consumed.
inline DetectionRun run_detection(std::span<const Frame> input, const ComparatorConfig& cfg,
                                  const PipelineParams& p) {
  validate(p);
  validate(cfg);
  std::vector<Frame> filtered;
  std::span<const Frame> frames = input;
  if (p.prefilter != Prefilter::None) {
    filtered.resize(input.size());
    parallel_for(input.size(), p.jobs, [&](std::size_t i) { filtered[i] = prefilter(input[i], p.prefilter); });
    frames = filtered;
  }
  DetectionRun run;
  run.grid = choose_grid(frames, p);
  const BuildOptions opts{0, p.jobs};
  run.segments.push_back(backfilled_segment(0, build_srbi(frames, run.grid, cfg, p.max_frames, opts), frames, true));
  for (std::size_t start = p.rebuild_every; start + 1 < frames.size(); start += p.rebuild_every) {
    const auto window = frames.subspan(start);
    const BuildOptions wopts{static_cast<long>(start), p.jobs};
    const auto& prev = run.segments.back();
    auto rebuilt = update_srbi(prev.raw, window, cfg, p.max_frames, wopts);
    const bool swapped = !(rebuilt == prev.raw);
    if (swapped) {
      run.segments.push_back(backfilled_segment(start, std::move(rebuilt), frames, true));
    } else {
      ModelSegment kept = prev;
      kept.start = start;
      kept.swapped = false;
      run.segments.push_back(std::move(kept));
    }
  }

  const auto classifier = make_classifier(run.grid, p);
  run.frames.resize(frames.size());
  parallel_for(frames.size(), p.jobs, [&](std::size_t i) {
    const auto seg = std::find_if(run.segments.rbegin(), run.segments.rend(),
                                  [&](const ModelSegment& s) { return s.start <= i; });
    run.frames[i] = detect_frame(seg->model, frames[i], p, *classifier);
  });
  return run;
}

}  // namespace blockbg
