// Command-line front end: model, detect, bench and entropy subcommands.
//
// Exit codes: 0 success, 1 runtime or pipeline failure, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "blockbg/background.hpp"
#include "blockbg/bench.hpp"
#include "blockbg/blocks.hpp"
#include "blockbg/comparators.hpp"
#include "blockbg/foreground.hpp"
#include "blockbg/imaging.hpp"
#include "blockbg/pipeline.hpp"
#include "blockbg/scene.hpp"

namespace fs = std::filesystem;
using namespace blockbg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/// Thrown for invalid option combinations discovered after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string input;
  std::string pattern = kDefaultSequencePattern;
  std::string grid = "auto";
  std::string grid_thresholds = "0.05,0.2";
  std::string method = "dct";
  double threshold = -1.0;  // < 0: per-method default
  int xor_shift = kDefaultXorShift;
  int dct_keep = kDefaultDctKeep;
  std::string prefilter = "none";
  int sub_shift = kDefaultSubtractShift;
  int median_window = kDefaultMedianWindow;
  std::size_t min_area = 0;
  bool no_validate = false;
  std::string validator = "heuristic";
  HeuristicParams heuristic;
  std::size_t max_frames = kDefaultMaxFrames;
  std::size_t rebuild_every = 300;
  double min_coverage = 1.0;
  bool no_backfill = false;
  int jobs = 1;

  std::string out;
  std::string status;
  std::string model;
  std::size_t model_frames = 0;
  std::string scene;
  std::vector<std::string> files;
};

const char* kDefaultsTable = R"(Defaults (chosen by hand or tuned once on the synthetic scenes; all overridable):
  --grid auto            entropy-delta bands: <0.05 -> 8, <0.2 -> 16, else 32
  --method dct           thresholds: absdiff 6.0, entropy 0.5, xor 0.75, dct 6.0
  --xor-shift 3          comparator quantization shift (xor method)
  --dct-k 10             zigzag DCT coefficients compared (dct method)
  --sub-shift 5          subtraction quantization shift
  --median-window 3      foreground median window
  --min-area 0           0 = 0.1% of the cropped frame area
  --max-frames 150       background build frame budget
  --rebuild-every 300    frames between background rebuilds
  heuristic validator    aspect [0.5, 4.0], fill >= 0.4, area [0.1%, 50%])";

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto key = line.substr(0, eq);
    auto value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    entries.emplace_back(key, value);
  }
  return entries;
}

/// Splices `--config FILE` entries in front of the command-line flags so
/// explicit flags (parsed later, last one wins) take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config.empty() || args.size() < 2) return args;
  std::vector<std::string> injected;
  for (const auto& [key, value] : read_config_file(config)) {
    if (value == "true") injected.push_back("--" + key);
    else if (value != "false") injected.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

void add_input_options(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--input", rc.input, "Directory holding the frame sequence")->required();
  cmd->add_option("--pattern", rc.pattern, "Frame file pattern")->capture_default_str();
}

void add_model_options(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--grid", rc.grid, "Cells per side")->check(CLI::IsMember({"auto", "8", "16", "32"}));
  cmd->add_option("--grid-thresholds", rc.grid_thresholds, "Entropy-delta band edges low,high");
  cmd->add_option("--method", rc.method, "Block comparator")->check(CLI::IsMember({"absdiff", "entropy", "xor", "dct"}));
  cmd->add_option("--threshold", rc.threshold, "Static-verdict threshold (default per method)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--xor-shift", rc.xor_shift, "XOR comparator quantization shift")->check(CLI::Range(0, 7));
  cmd->add_option("--dct-k", rc.dct_keep, "DCT zigzag coefficient count")->check(CLI::PositiveNumber);
  cmd->add_option("--prefilter", rc.prefilter, "Noise prefilter")->check(CLI::IsMember({"none", "median3"}));
  cmd->add_option("--max-frames", rc.max_frames, "Background build frame budget")->check(CLI::Range(2, 1 << 30));
  cmd->add_option("--jobs", rc.jobs, "Worker threads")->check(CLI::Range(1, 256));
}

void add_detect_options(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--sub-shift", rc.sub_shift, "Subtraction quantization shift")->check(CLI::Range(0, 7));
  cmd->add_option("--median-window", rc.median_window, "Foreground median window (odd)")
      ->check(CLI::Range(3, 99));
  cmd->add_option("--min-area", rc.min_area, "Minimum object area in pixels (0 = 0.1% of frame)");
  cmd->add_flag("--no-validate", rc.no_validate, "Skip validation; every object is a vehicle");
  cmd->add_option("--validator", rc.validator, "Validation classifier")->check(CLI::IsMember({"heuristic"}));
  cmd->add_option("--aspect-min", rc.heuristic.aspect_min);
  cmd->add_option("--aspect-max", rc.heuristic.aspect_max);
  cmd->add_option("--fill-min", rc.heuristic.fill_min);
  cmd->add_option("--area-min-frac", rc.heuristic.area_min_frac);
  cmd->add_option("--area-max-frac", rc.heuristic.area_max_frac);
  cmd->add_option("--rebuild-every", rc.rebuild_every, "Frames between background rebuilds")
      ->check(CLI::PositiveNumber);
}

ComparatorConfig comparator_from(const RunConfig& rc) {
  const auto m = parse_method(rc.method);
  if (!m) throw UsageError("unknown method " + rc.method);
  ComparatorConfig cfg = ComparatorConfig::defaults(*m);
  if (rc.threshold >= 0.0) cfg.threshold = rc.threshold;
  cfg.xor_shift = rc.xor_shift;
  cfg.dct_keep = rc.dct_keep;
  validate(cfg);
  return cfg;
}

PipelineParams pipeline_from(const RunConfig& rc) {
  PipelineParams p;
  p.grid = rc.grid == "auto" ? 0 : std::stoi(rc.grid);
  const auto comma = rc.grid_thresholds.find(',');
  if (comma == std::string::npos) throw UsageError("--grid-thresholds expects low,high");
  try {
    p.grid_thresholds.low = std::stod(rc.grid_thresholds.substr(0, comma));
    p.grid_thresholds.high = std::stod(rc.grid_thresholds.substr(comma + 1));
  } catch (const std::logic_error&) {
    throw UsageError("--grid-thresholds expects two numbers");
  }
  p.prefilter = rc.prefilter == "median3" ? Prefilter::Median3 : Prefilter::None;
  p.subtract_shift = rc.sub_shift;
  p.median_window = rc.median_window;
  p.min_area = rc.min_area;
  p.validate = !rc.no_validate;
  p.heuristic = rc.heuristic;
  p.max_frames = rc.max_frames;
  p.rebuild_every = rc.rebuild_every;
  p.jobs = rc.jobs;
  validate(p);
  return p;
}

std::string effective_config(const ComparatorConfig& cfg, const PipelineParams& p, const RunConfig& rc) {
  std::ostringstream o;
  o << "input=" << rc.input << "\npattern=" << rc.pattern << "\nmethod=" << to_string(cfg.method)
    << "\nthreshold=" << cfg.threshold << "\nxor-shift=" << cfg.xor_shift << "\ndct-k=" << cfg.dct_keep
    << "\ngrid=" << rc.grid << "\ngrid-thresholds=" << p.grid_thresholds.low << ',' << p.grid_thresholds.high
    << "\nprefilter=" << rc.prefilter << "\nsub-shift=" << p.subtract_shift
    << "\nmedian-window=" << p.median_window << "\nmin-area=" << p.min_area
    << "\nvalidate=" << (p.validate ? "true" : "false") << "\naspect-min=" << p.heuristic.aspect_min
    << "\naspect-max=" << p.heuristic.aspect_max << "\nfill-min=" << p.heuristic.fill_min
    << "\narea-min-frac=" << p.heuristic.area_min_frac << "\narea-max-frac=" << p.heuristic.area_max_frac
    << "\nmax-frames=" << p.max_frames << "\nrebuild-every=" << p.rebuild_every << '\n';
  return o.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::WriteFailed, "cannot write " + path.string());
}

int cmd_model(const RunConfig& rc) {
  const auto cfg = comparator_from(rc);
  const auto params = pipeline_from(rc);
  if (rc.min_coverage < 0.0 || rc.min_coverage > 1.0) throw UsageError("--min-coverage must be in [0, 1]");

  auto frames = load_sequence(rc.input, rc.pattern);
  for (auto& f : frames) f = prefilter(f, params.prefilter);
  const auto grid = choose_grid(frames, params);
  const auto raw = build_srbi(frames, grid, cfg, params.max_frames, {0, params.jobs});
  std::printf("grid %d (%dx%d blocks)\n", grid.g, grid.block_width, grid.block_height);
  std::printf("coverage %.6f after %zu frames\n", coverage(raw), raw.frames_consumed);

  BackgroundModel model = raw;
  if (!rc.no_backfill && !raw.complete()) {
    model = backfill(raw, frames[raw.frames_consumed - 1]);
    std::fprintf(stderr, "backfilled %zu cell(s) from frame %zu\n", model.settled_count() - raw.settled_count(),
                 raw.frames_consumed - 1);
  }
  const fs::path out = rc.out;
  const fs::path status = rc.status.empty() ? fs::path(rc.out + ".cells") : fs::path(rc.status);
  save_model(model, out, status);
  write_text(rc.out + ".config", effective_config(cfg, params, rc));
  if (coverage(model) < rc.min_coverage) {
    std::fprintf(stderr, "coverage %.6f below required %.6f\n", coverage(model), rc.min_coverage);
    return kExitFailure;
  }
  return kExitOk;
}

std::string objects_csv(const std::vector<FrameDetections>& dets, long first_index) {
  std::string out = "frame_index,object_index,x,y,w,h,area,label,score\n";
  char line[256];
  for (std::size_t f = 0; f < dets.size(); ++f) {
    for (std::size_t k = 0; k < dets[f].objects.size(); ++k) {
      const auto& o = dets[f].objects[k];
      std::snprintf(line, sizeof line, "%ld,%zu,%d,%d,%d,%d,%ld,%s,%.6f\n", first_index + static_cast<long>(f), k,
                    o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h, o.area, std::string(to_string(o.label)).c_str(),
                    o.score);
      out += line;
    }
  }
  return out;
}

int cmd_detect(const RunConfig& rc) {
  const auto cfg = comparator_from(rc);
  auto params = pipeline_from(rc);
  if (rc.model.empty() == (rc.model_frames == 0)) {
    throw UsageError("detect needs exactly one of --model or --model-frames");
  }

  const auto paths = sequence_paths(rc.input, rc.pattern);
  const auto frames = load_sequence(rc.input, rc.pattern);
  std::vector<FrameDetections> dets;
  if (!rc.model.empty()) {
    const fs::path status = rc.status.empty() ? fs::path(rc.model + ".cells") : fs::path(rc.status);
    BackgroundModel model;
    if (fs::exists(status)) {
      model = load_model(rc.model, status);
    } else if (params.grid != 0) {
      const auto image = load_frame(rc.model);
      model = BackgroundModel(make_grid(image.width(), image.height(), params.grid));
      for (int y = 0; y < model.grid().cropped_height; ++y)
        for (int x = 0; x < model.grid().cropped_width; ++x) model.pixels()(x, y) = image(x, y);
      for (auto r = 0; r < model.grid().g; ++r)
        for (auto c = 0; c < model.grid().g; ++c) model.cell(r, c) = {CellState::Settled, 0};
    } else {
      throw Error(ErrorCode::ReadFailed, "missing cell status file " + status.string() + " (or pass a fixed --grid)");
    }
    if (!model.grid().matches(frames.front())) {
      throw Error(ErrorCode::ShapeMismatch,
                  "model is " + std::to_string(model.grid().source_width) + "x" +
                      std::to_string(model.grid().source_height) + " but frames are " +
                      std::to_string(frames.front().width()) + "x" + std::to_string(frames.front().height()));
    }
    if (!model.complete()) throw Error(ErrorCode::ModelIncomplete, "model has unsettled cells");
    dets = detect_all(model, frames, params);
  } else {
    params.max_frames = rc.model_frames;
    if (params.max_frames < 2) throw UsageError("--model-frames must be >= 2");
    auto run = run_detection(frames, cfg, params);
    for (const auto& seg : run.segments) {
      std::printf("model from frame %zu: coverage %.6f%s\n", seg.start, coverage(seg.raw),
                  seg.swapped ? "" : " (kept previous)");
    }
    dets = std::move(run.frames);
  }

  const fs::path out = rc.out;
  fs::create_directories(out);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "mask_%06ld.pgm", paths[i].first);
    save_mask(dets[i].mask, out / name);
  }
  write_text(out / "objects.csv", objects_csv(dets, paths.front().first));
  write_text(out / "config.txt", effective_config(cfg, params, rc));
  std::size_t total = 0;
  for (const auto& d : dets) total += d.objects.size();
  std::printf("%zu frames, %zu objects\n", dets.size(), total);
  return kExitOk;
}

int cmd_bench(const RunConfig& rc) {
  auto params = pipeline_from(rc);
  SceneSpec spec;
  try {
    spec = load_scene_spec(rc.scene);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  auto configs = default_configs();
  for (auto& c : configs) {
    c.xor_shift = rc.xor_shift;
    c.dct_keep = rc.dct_keep;
  }
  const auto report = bench_methods(spec, configs, params);
  const auto csv = report_csv(report);
  write_text(rc.out, csv);
  std::printf("scene seed=%llu sigma=%g\n", static_cast<unsigned long long>(report.seed), report.noise_sigma);
  std::printf("%-8s %9s %9s %9s %9s %9s %9s %6s\n", "method", "precision", "recall", "f1", "mean_iou", "det_acc",
              "coverage", "frames");
  for (const auto& r : report.rows) {
    std::printf("%-8s %9.4f %9.4f %9.4f %9.4f %9.4f %9.4f %6ld\n", std::string(to_string(r.config.method)).c_str(),
                r.metrics.pixel_precision, r.metrics.pixel_recall, r.metrics.pixel_f1, r.metrics.mean_iou,
                r.metrics.detection_accuracy, r.coverage,
                r.frames_to_cover > 0 ? static_cast<long>(r.frames_to_cover) : -1L);
  }
  return kExitOk;
}

int cmd_entropy(const RunConfig& rc) {
  std::vector<std::pair<std::string, Frame>> frames;
  if (!rc.input.empty()) {
    for (const auto& [idx, path] : sequence_paths(rc.input, rc.pattern)) frames.emplace_back(path.string(), load_frame(path));
  }
  for (const auto& f : rc.files) frames.emplace_back(f, load_frame(f));
  if (frames.empty()) throw Error(ErrorCode::SequenceTooShort, "no frames given");
  std::vector<double> values;
  for (const auto& [name, frame] : frames) {
    values.push_back(image_entropy(frame));
    std::printf("%.6f %s\n", values.back(), name.c_str());
  }
  if (frames.size() == 2) {
    const auto p = pipeline_from(rc);
    const double delta = entropy_delta(frames[0].second, frames[1].second);
    std::printf("delta_h %.6f\ngrid %d\n", delta, grid_for_entropy_delta(delta, p.grid_thresholds));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-based background modeling and moving-vehicle detection", "blockbg"};
  app.footer(kDefaultsTable);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--config", "key=value config file; explicit flags override it");
  RunConfig rc;

  auto* model = app.add_subcommand("model", "Build the static reference background image");
  add_input_options(model, rc);
  add_model_options(model, rc);
  model->add_option("--out", rc.out, "Output background PGM")->required();
  model->add_option("--status", rc.status, "Cell status sidecar (default <out>.cells)");
  model->add_option("--min-coverage", rc.min_coverage, "Required final coverage");
  model->add_flag("--no-backfill", rc.no_backfill, "Leave unsettled cells unfilled");

  auto* detect = app.add_subcommand("detect", "Detect moving objects against a background model");
  add_input_options(detect, rc);
  add_model_options(detect, rc);
  add_detect_options(detect, rc);
  detect->add_option("--model", rc.model, "Background PGM written by `model`");
  detect->add_option("--status", rc.status, "Cell status sidecar (default <model>.cells)");
  detect->add_option("--model-frames", rc.model_frames, "Build the model in-line from up to N frames");
  detect->add_option("--out", rc.out, "Output directory for masks and objects.csv")->required();

  auto* bench = app.add_subcommand("bench", "Compare the four comparators on a synthetic scene");
  bench->add_option("--scene", rc.scene, "Scene spec file")->required();
  bench->add_option("--out", rc.out, "Report CSV")->required();
  add_model_options(bench, rc);
  add_detect_options(bench, rc);

  auto* entropy = app.add_subcommand("entropy", "Print whole-frame entropy in bits");
  entropy->add_option("files", rc.files, "PGM/PPM frames");
  entropy->add_option("--input", rc.input, "Directory holding a frame sequence");
  entropy->add_option("--pattern", rc.pattern, "Frame file pattern");
  entropy->add_option("--grid-thresholds", rc.grid_thresholds, "Entropy-delta band edges low,high");

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = expand_config(args);
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  }

  try {
    if (*model) return cmd_model(rc);
    if (*detect) return cmd_detect(rc);
    if (*bench) return cmd_bench(rc);
    if (*entropy) return cmd_entropy(rc);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidParameter) {
      std::fprintf(stderr, "usage error: %s\n", e.what());
      return kExitUsage;
    }
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
