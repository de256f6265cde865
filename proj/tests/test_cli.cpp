#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "blockbg/foreground.hpp"
#include "blockbg/imaging.hpp"
#include "blockbg/scene.hpp"
#include "support.hpp"

using namespace blockbg;
using testing_support::read_file;
using testing_support::TempDir;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(const TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(BLOCKBG_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, ModelOnStaticSequence) {
  TempDir dir("cli_model");
  testing_support::write_sequence(dir / "in", std::vector<Frame>(10, gen_scene(SceneSpec{}).true_background));
  const auto r = run(dir, "model --input " + q(dir / "in") + " --out " + q(dir / "bg.pgm"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("coverage 1.000000"), std::string::npos) << r.out;
  EXPECT_TRUE(std::filesystem::exists(dir / "bg.pgm.cells"));
  EXPECT_TRUE(std::filesystem::exists(dir / "bg.pgm.config"));
  EXPECT_EQ(load_frame(dir / "bg.pgm"), gen_scene(SceneSpec{}).true_background);
}

TEST(Cli, MethodTypoIsUsageError) {
  TempDir dir("cli_typo");
  testing_support::write_sequence(dir / "in", std::vector<Frame>(3, Image(32, 32, 5)));
  const auto r = run(dir, "model --input " + q(dir / "in") + " --out " + q(dir / "bg.pgm") + " --method dctt");
  EXPECT_EQ(r.code, 2);
  for (const char* m : {"absdiff", "entropy", "xor", "dct"}) EXPECT_NE(r.err.find(m), std::string::npos) << r.err;
  EXPECT_FALSE(std::filesystem::exists(dir / "bg.pgm"));
}

TEST(Cli, SingleFrameIsRuntimeFailure) {
  TempDir dir("cli_one");
  testing_support::write_sequence(dir / "in", std::vector<Frame>(1, Image(32, 32, 5)));
  const auto r = run(dir, "model --input " + q(dir / "in") + " --out " + q(dir / "bg.pgm"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("sequence"), std::string::npos) << r.err;
}

TEST(Cli, InvalidValuesAreUsageErrorsWithoutOutputs) {
  TempDir dir("cli_bad");
  testing_support::write_sequence(dir / "in", std::vector<Frame>(3, Image(32, 32, 5)));
  const std::string base = "model --input " + q(dir / "in") + " --out " + q(dir / "bg.pgm");
  EXPECT_EQ(run(dir, base + " --grid 12").code, 2);
  EXPECT_EQ(run(dir, base + " --grid-thresholds 0.5,0.1").code, 2);
  EXPECT_EQ(run(dir, base + " --xor-shift 9").code, 2);
  EXPECT_EQ(run(dir, base + " --threshold -1").code, 2);
  EXPECT_EQ(run(dir, base + " --min-coverage 2").code, 2);
  EXPECT_EQ(run(dir, "model --out x.pgm").code, 2);
  EXPECT_EQ(run(dir, "frobnicate").code, 2);
  EXPECT_EQ(run(dir, "").code, 2);
  EXPECT_FALSE(std::filesystem::exists(dir / "bg.pgm"));
}

TEST(Cli, DetectIdenticalFramesGivesEmptyOutput) {
  TempDir dir("cli_detect_static");
  const auto bg = gen_scene(SceneSpec{}).true_background;
  testing_support::write_sequence(dir / "in", std::vector<Frame>(4, bg));
  ASSERT_EQ(run(dir, "model --input " + q(dir / "in") + " --out " + q(dir / "bg.pgm")).code, 0);
  const auto r = run(dir, "detect --input " + q(dir / "in") + " --model " + q(dir / "bg.pgm") + " --out " + q(dir / "det"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(dir / "det" / "objects.csv"), "frame_index,object_index,x,y,w,h,area,label,score\n");
  for (int i = 0; i < 4; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "mask_%06d.pgm", i);
    EXPECT_EQ(load_mask(dir / "det" / name).count(), 0u);
  }
}

TEST(Cli, DetectFindsSceneMovers) {
  TempDir dir("cli_detect_scene");
  const auto scene = gen_scene(reference_scene(0.0));
  testing_support::write_sequence(dir / "in", scene.frames);
  const auto r = run(dir, "detect --input " + q(dir / "in") + " --model-frames 30 --out " + q(dir / "det"));
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(read_file(dir / "det" / "objects.csv"));
  std::string line;
  std::getline(csv, line);
  int rows = 0;
  while (std::getline(csv, line)) {
    int frame, idx, x, y, w, h;
    ASSERT_EQ(std::sscanf(line.c_str(), "%d,%d,%d,%d,%d,%d", &frame, &idx, &x, &y, &w, &h), 6) << line;
    if (line.find(",vehicle,") == std::string::npos) continue;
    ++rows;
    double best = 0.0;
    for (const auto& t : scene.truth_boxes[static_cast<std::size_t>(frame)]) best = std::max(best, iou(Box{x, y, w, h}, t.box));
    EXPECT_GE(best, 0.5) << line;
  }
  EXPECT_GT(rows, 60);
}

TEST(Cli, DetectDimensionMismatchFails) {
  TempDir dir("cli_detect_dims");
  testing_support::write_sequence(dir / "a", std::vector<Frame>(3, Image(64, 64, 9)));
  testing_support::write_sequence(dir / "b", std::vector<Frame>(3, Image(80, 64, 9)));
  ASSERT_EQ(run(dir, "model --input " + q(dir / "a") + " --out " + q(dir / "bg.pgm")).code, 0);
  const auto r = run(dir, "detect --input " + q(dir / "b") + " --model " + q(dir / "bg.pgm") + " --out " + q(dir / "det"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("64x64"), std::string::npos) << r.err;
  EXPECT_EQ(run(dir, "detect --input " + q(dir / "b") + " --model " + q(dir / "missing.pgm") + " --out " + q(dir / "d2")).code, 1);
  EXPECT_EQ(run(dir, "detect --input " + q(dir / "b") + " --out " + q(dir / "d3")).code, 2);
}

TEST(Cli, BenchWritesFourRows) {
  TempDir dir("cli_bench");
  const auto r = run(dir, "bench --scene " + q(std::filesystem::path(BLOCKBG_SCENE_DIR) / "s1.scene") + " --out " +
                              q(dir / "report.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = read_file(dir / "report.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_NE(r.out.find("seed=42"), std::string::npos);
  EXPECT_EQ(run(dir, "bench --scene " + q(dir / "missing.scene") + " --out " + q(dir / "r2.csv")).code, 2);
  testing_support::write_file(dir / "bad.scene", "width=wide\n");
  EXPECT_EQ(run(dir, "bench --scene " + q(dir / "bad.scene") + " --out " + q(dir / "r3.csv")).code, 2);
  EXPECT_FALSE(std::filesystem::exists(dir / "r3.csv"));
}

TEST(Cli, EntropyOutput) {
  TempDir dir("cli_entropy");
  save_frame(Image(16, 16, 128), dir / "flat.pgm");
  std::vector<std::uint8_t> all(256);
  for (int i = 0; i < 256; ++i) all[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  save_frame(Image(16, 16, all), dir / "uniform.pgm");
  auto r = run(dir, "entropy " + q(dir / "flat.pgm"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("0.000000", 0), 0u) << r.out;
  r = run(dir, "entropy " + q(dir / "uniform.pgm"));
  EXPECT_EQ(r.out.rfind("8.000000", 0), 0u) << r.out;
  r = run(dir, "entropy " + q(dir / "uniform.pgm") + " " + q(dir / "uniform.pgm"));
  EXPECT_NE(r.out.find("delta_h 0.000000\ngrid 8\n"), std::string::npos) << r.out;
  EXPECT_EQ(run(dir, "entropy " + q(dir / "nope.pgm")).code, 1);
}

TEST(Cli, ConfigFileIsOverriddenByFlags) {
  TempDir dir("cli_config");
  testing_support::write_sequence(dir / "in", std::vector<Frame>(3, gen_scene(SceneSpec{}).true_background));
  testing_support::write_file(dir / "run.cfg", "# settings\nmethod = xor\ngrid=16\nthreshold=0.5\n");
  auto r = run(dir, "model --config " + q(dir / "run.cfg") + " --input " + q(dir / "in") + " --out " + q(dir / "a.pgm"));
  ASSERT_EQ(r.code, 0) << r.err;
  auto log = read_file(dir / "a.pgm.config");
  EXPECT_NE(log.find("method=xor\n"), std::string::npos) << log;
  EXPECT_NE(log.find("grid=16\n"), std::string::npos);
  EXPECT_NE(log.find("threshold=0.5\n"), std::string::npos);
  r = run(dir, "model --config " + q(dir / "run.cfg") + " --input " + q(dir / "in") + " --out " + q(dir / "b.pgm") +
                   " --method absdiff --threshold 3");
  ASSERT_EQ(r.code, 0) << r.err;
  log = read_file(dir / "b.pgm.config");
  EXPECT_NE(log.find("method=absdiff\n"), std::string::npos) << log;
  EXPECT_NE(log.find("threshold=3\n"), std::string::npos);
  EXPECT_NE(log.find("grid=16\n"), std::string::npos);
  EXPECT_EQ(log.find("jobs"), std::string::npos);
  EXPECT_EQ(run(dir, "model --config " + q(dir / "absent.cfg") + " --input x --out y").code, 2);
}

TEST(Cli, HelpListsDefaults) {
  TempDir dir("cli_help");
  const auto r = run(dir, "--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("xor 0.75"), std::string::npos) << r.out;
}
