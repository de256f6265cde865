#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "blockbg/blocks.hpp"
#include "blockbg/comparators.hpp"
#include "blockbg/error.hpp"
#include "blockbg/imaging.hpp"
#include "blockbg/parallel.hpp"

namespace blockbg {

enum class CellState { Unsettled, Settled, Backfilled };

constexpr std::string_view to_string(CellState s) {
  switch (s) {
    case CellState::Unsettled: return "unsettled";
    case CellState::Settled: return "settled";
    case CellState::Backfilled: return "backfilled";
  }
  return "unknown";
}

struct CellStatus {
  CellState state = CellState::Unsettled;
  /// Frame index the cell's pixels were committed from; -1 unless Settled.
  long settle_index = -1;

  friend bool operator==(const CellStatus&, const CellStatus&) = default;
};

/// Static reference background image: a cropped-extent pixel buffer assembled
/// cell by cell, plus the settle status of every cell.
class BackgroundModel {
 public:
  BackgroundModel() = default;
  explicit BackgroundModel(const BlockGrid& grid)
      : grid_(grid), pixels_(grid.cropped_width, grid.cropped_height),
        cells_(static_cast<std::size_t>(grid.cells())) {}

  const BlockGrid& grid() const noexcept { return grid_; }
  const Image& pixels() const noexcept { return pixels_; }
  Image& pixels() noexcept { return pixels_; }

  const CellStatus& cell(int row, int col) const { return cells_.at(index(row, col)); }
  CellStatus& cell(int row, int col) { return cells_.at(index(row, col)); }
  std::span<const CellStatus> cells() const noexcept { return cells_; }

  /// First frame index of the stream the model was built from, and how many
  /// frames the build consumed.
  long first_frame = 0;
  std::size_t frames_consumed = 0;

  std::size_t settled_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(), [](const CellStatus& c) {
      return c.state != CellState::Unsettled;
    }));
  }
  bool complete() const noexcept { return settled_count() == cells_.size(); }

  Image block(int row, int col) const { return extract_block(pixels_, grid_, row, col); }

  /// The model at source-frame size with crop margins set to 0.
  Image full_frame() const {
    Image out(grid_.source_width, grid_.source_height);
    for (int y = 0; y < grid_.cropped_height; ++y) {
      const auto src = pixels_.row(y);
      std::copy(src.begin(), src.end(), &out(0, y));
    }
    return out;
  }

  friend bool operator==(const BackgroundModel&, const BackgroundModel&) = default;

 private:
  std::size_t index(int row, int col) const {
    check_cell(grid_, row, col);
    return static_cast<std::size_t>(row * grid_.g + col);
  }

  BlockGrid grid_;
  Image pixels_;
  std::vector<CellStatus> cells_;
};

inline double coverage(const BackgroundModel& model) {
  if (model.cells().empty()) return 0.0;
  return static_cast<double>(model.settled_count()) / static_cast<double>(model.cells().size());
}

/// Fraction of cells settled from frames with index <= `frame_index`.
/// Backfilled cells do not count.
inline double coverage_at(const BackgroundModel& model, long frame_index) {
  if (model.cells().empty()) return 0.0;
  const auto n = std::count_if(model.cells().begin(), model.cells().end(), [&](const CellStatus& c) {
    return c.state == CellState::Settled && c.settle_index <= frame_index;
  });
  return static_cast<double>(n) / static_cast<double>(model.cells().size());
}

/// Number of frames consumed when every cell had settled (the larger settle
/// index plus one, relative to the build's first frame), or 0 when the model
/// never reached full coverage on its own.
inline std::size_t frames_to_cover(const BackgroundModel& model) {
  long last = -1;
  for (const auto& c : model.cells()) {
    if (c.state != CellState::Settled) return 0;
    last = std::max(last, c.settle_index);
  }
  return static_cast<std::size_t>(last - model.first_frame + 1);
}

inline constexpr std::size_t kDefaultMaxFrames = 150;

struct BuildOptions {
  /// Index of frames[0] in the caller's numbering; settle indices use it.
  long first_index = 0;
  int jobs = 1;
};

/// Settle-on-agreement build. For each adjacent pair (t, t+1) every
/// still-unsettled cell is compared; a Static verdict commits the cell from
/// frame t+1. Stops once all cells settle or `max_frames` frames are used.
inline BackgroundModel build_srbi(std::span<const Frame> frames, const BlockGrid& grid,
                                  const ComparatorConfig& cfg, std::size_t max_frames = kDefaultMaxFrames,
                                  const BuildOptions& options = {}) {
  validate(cfg);
  if (frames.size() < 2) {
    throw Error(ErrorCode::SequenceTooShort,
                "background build needs at least 2 frames, got " + std::to_string(frames.size()));
  }
  if (max_frames < 2) throw Error(ErrorCode::InvalidParameter, "frame budget must be >= 2");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!grid.matches(frames[i])) {
      throw Error(ErrorCode::InconsistentSequence,
                  "frame index " + std::to_string(options.first_index + static_cast<long>(i)) + " is " +
                      std::to_string(frames[i].width()) + "x" + std::to_string(frames[i].height()) +
                      ", grid expects " + std::to_string(grid.source_width) + "x" +
                      std::to_string(grid.source_height));
    }
  }

  BackgroundModel model(grid);
  model.first_frame = options.first_index;
  const std::size_t limit = std::min(frames.size(), max_frames);
  std::vector<int> pending(static_cast<std::size_t>(grid.cells()));
  for (int i = 0; i < grid.cells(); ++i) pending[static_cast<std::size_t>(i)] = i;
  std::vector<Verdict> verdicts;

  for (std::size_t t = 0; t + 1 < limit && !pending.empty(); ++t) {
    const Frame& prev = frames[t];
    const Frame& next = frames[t + 1];
    verdicts.assign(pending.size(), Verdict::Dynamic);
    parallel_for(pending.size(), options.jobs, [&](std::size_t i) {
      const int row = pending[i] / grid.g;
      const int col = pending[i] % grid.g;
      verdicts[i] = compare(extract_block(prev, grid, row, col), extract_block(next, grid, row, col), cfg).verdict;
    });
    std::vector<int> still;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      const int row = pending[i] / grid.g;
      const int col = pending[i] % grid.g;
      if (verdicts[i] == Verdict::Static) {
        store_block(model.pixels(), grid, row, col, extract_block(next, grid, row, col));
        model.cell(row, col) = {CellState::Settled, options.first_index + static_cast<long>(t + 1)};
      } else {
        still.push_back(pending[i]);
      }
    }
    pending = std::move(still);
    model.frames_consumed = t + 2;
  }
  return model;
}

/// Fills every unsettled cell from `fallback`; settled cells are untouched.
inline BackgroundModel backfill(BackgroundModel model, const Frame& fallback) {
  const auto& grid = model.grid();
  if (!grid.matches(fallback)) {
    throw Error(ErrorCode::ShapeMismatch, "fallback frame does not match the model's source size");
  }
  for (int row = 0; row < grid.g; ++row) {
    for (int col = 0; col < grid.g; ++col) {
      if (model.cell(row, col).state != CellState::Unsettled) continue;
      store_block(model.pixels(), grid, row, col, extract_block(fallback, grid, row, col));
      model.cell(row, col) = {CellState::Backfilled, -1};
    }
  }
  return model;
}

/// Full rebuild from a later stream. The rebuilt model replaces `current`
/// only if its coverage is at least as high.
inline BackgroundModel update_srbi(const BackgroundModel& current, std::span<const Frame> frames,
                                   const ComparatorConfig& cfg, std::size_t max_frames = kDefaultMaxFrames,
                                   const BuildOptions& options = {}) {
  auto rebuilt = build_srbi(frames, current.grid(), cfg, max_frames, options);
  return coverage(rebuilt) >= coverage(current) ? rebuilt : current;
}

/// Sidecar text: one `row col status settle_index` line per cell, row-major.
inline std::string format_cell_status(const BackgroundModel& model) {
  std::ostringstream out;
  const int g = model.grid().g;
  for (int row = 0; row < g; ++row) {
    for (int col = 0; col < g; ++col) {
      const auto& c = model.cell(row, col);
      out << row << ' ' << col << ' ' << to_string(c.state) << ' ' << c.settle_index << '\n';
    }
  }
  return out.str();
}

inline void save_model(const BackgroundModel& model, const std::filesystem::path& image_path,
                       const std::filesystem::path& status_path) {
  save_frame(model.full_frame(), image_path);
  std::ofstream out(status_path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::WriteFailed, "cannot open " + status_path.string());
  out << format_cell_status(model);
  out.flush();
  if (!out) throw Error(ErrorCode::WriteFailed, "short write to " + status_path.string());
}

/// Reads a model written by save_model. The grid size is recovered from the
/// number of status lines.
inline BackgroundModel load_model(const std::filesystem::path& image_path,
                                  const std::filesystem::path& status_path) {
  const Frame image = load_frame(image_path);
  std::ifstream in(status_path);
  if (!in) throw Error(ErrorCode::ReadFailed, "cannot open " + status_path.string());
  struct Line {
    int row, col;
    std::string state;
    long index;
  };
  std::vector<Line> lines;
  std::string text;
  while (std::getline(in, text)) {
    if (text.empty()) continue;
    std::istringstream ls(text);
    Line l{};
    if (!(ls >> l.row >> l.col >> l.state >> l.index)) {
      throw Error(ErrorCode::MalformedHeader, status_path.string() + ": bad status line '" + text + "'");
    }
    lines.push_back(l);
  }
  const int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(lines.size()))));
  if (g < 1 || static_cast<std::size_t>(g * g) != lines.size()) {
    throw Error(ErrorCode::MalformedHeader,
                status_path.string() + ": " + std::to_string(lines.size()) + " cells is not a square grid");
  }
  const auto grid = make_grid(image.width(), image.height(), g);
  BackgroundModel model(grid);
  for (int y = 0; y < grid.cropped_height; ++y) {
    const auto src = image.row(y).first(static_cast<std::size_t>(grid.cropped_width));
    std::copy(src.begin(), src.end(), &model.pixels()(0, y));
  }
  for (const auto& l : lines) {
    CellStatus status;
    if (l.state == "settled") {
      status = {CellState::Settled, l.index};
    } else if (l.state == "backfilled") {
      status = {CellState::Backfilled, -1};
    } else if (l.state == "unsettled") {
      status = {CellState::Unsettled, -1};
    } else {
      throw Error(ErrorCode::MalformedHeader, status_path.string() + ": unknown cell state " + l.state);
    }
    model.cell(l.row, l.col) = status;
  }
  return model;
}

}  // namespace blockbg
