#pragma once

#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "blockbg/comparators.hpp"
#include "blockbg/metrics.hpp"
#include "blockbg/parallel.hpp"
#include "blockbg/pipeline.hpp"
#include "blockbg/scene.hpp"

namespace blockbg {

struct BenchRow {
  ComparatorConfig config;
  MetricsReport metrics;
  /// Coverage of the initial build before backfill.
  double coverage = 0.0;
  /// Frames consumed to reach full coverage; 0 if the build never did.
  std::size_t frames_to_cover = 0;
  BackgroundModel model;
};

struct BenchReport {
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  std::vector<BenchRow> rows;
};

inline std::vector<ComparatorConfig> default_configs() {
  std::vector<ComparatorConfig> cfgs;
  for (const auto m : kAllMethods) cfgs.push_back(ComparatorConfig::defaults(m));
  return cfgs;
}

inline BenchRow bench_one(const Scene& scene, const ComparatorConfig& cfg, PipelineParams params) {
  const auto run = run_detection(scene.frames, cfg, params);
  std::vector<Mask> masks;
  std::vector<std::vector<Box>> boxes;
  masks.reserve(run.frames.size());
  for (const auto& f : run.frames) {
    masks.push_back(f.mask);
    auto& fb = boxes.emplace_back();
    for (const auto& o : f.objects)
      if (o.label == Label::Vehicle) fb.push_back(o.bbox);
  }
  BenchRow row;
  row.config = cfg;
  row.metrics = evaluate(masks, boxes, scene.truth_masks, scene.truth_boxes);
  row.model = run.segments.front().raw;
  row.coverage = coverage(row.model);
  row.frames_to_cover = frames_to_cover(row.model);
  return row;
}

/// Runs the full pipeline once per comparator config on a generated scene.
/// With jobs > 1 the configs run concurrently, each single-threaded inside.
inline BenchReport bench_methods(const SceneSpec& spec, std::span<const ComparatorConfig> configs,
                                 const PipelineParams& params) {
  const Scene scene = gen_scene(spec);
  BenchReport report;
  report.seed = spec.seed;
  report.noise_sigma = spec.noise_sigma;
  report.rows.resize(configs.size());
  PipelineParams inner = params;
  inner.jobs = 1;
  parallel_for(configs.size(), params.jobs,
               [&](std::size_t i) { report.rows[i] = bench_one(scene, configs[i], inner); });
  return report;
}

inline std::string report_csv(const BenchReport& report) {
  std::string out = "method,pixel_precision,pixel_recall,pixel_f1,mean_iou,det_accuracy,coverage,frames_to_cover\n";
  char line[256];
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%ld\n",
                  std::string(to_string(r.config.method)).c_str(), r.metrics.pixel_precision,
                  r.metrics.pixel_recall, r.metrics.pixel_f1, r.metrics.mean_iou, r.metrics.detection_accuracy,
                  r.coverage, r.frames_to_cover > 0 ? static_cast<long>(r.frames_to_cover) : -1L);
    out += line;
  }
  return out;
}

}  // namespace blockbg
