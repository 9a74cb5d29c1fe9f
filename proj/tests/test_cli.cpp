#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "svo/cli.hpp"
#include "svo/config.hpp"
#include "svo/dataset.hpp"
#include "svo/error.hpp"
#include "svo/io.hpp"

using namespace svo;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "svo");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("svo_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ErrorCode parse_code(const std::string& text) {
  try {
    parse_run_config(nlohmann::json::parse(text));
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIoError;
}

}  // namespace

TEST(Config, DefaultsResolveAndRoundTrip) {
  const RunConfig c = parse_run_config(nlohmann::json::object());
  EXPECT_EQ(c.pipeline.patches_per_frame, 96);
  EXPECT_EQ(c.pipeline.nms_radius, 4);
  EXPECT_EQ(c.pipeline.removal_window, 18);
  EXPECT_EQ(c.patch_set.salient, 96);
  EXPECT_EQ(c.patch_set.random, 32);
  const nlohmann::json j = to_json(c);
  EXPECT_EQ(to_json(parse_run_config(j)), j);
}

TEST(Config, ValuesAreApplied) {
  const RunConfig c = parse_run_config(nlohmann::json::parse(
      R"({"seed": 9, "pipeline": {"provider": "tracker", "oracle_sigma": 0.25, "features": {"stride": 4}},
          "homography": {"length": 7, "augmentation": {"occlusion": {"enabled": false}}},
          "patch_set": {"salient": 60, "random": 20}})"));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.pipeline.seed, 9u);
  EXPECT_EQ(c.pipeline.provider, ProviderKind::kTracker);
  EXPECT_EQ(c.pipeline.oracle_sigma, 0.25);
  EXPECT_EQ(c.pipeline.features.stride, 4);
  EXPECT_EQ(c.homography.schedule.length, 7);
  EXPECT_FALSE(c.homography.augmentation.occlusion.enabled);
  EXPECT_EQ(c.patch_set.salient, 60);
}

TEST(Config, StrictRejections) {
  EXPECT_EQ(parse_code(R"({"unknown": 1})"), ErrorCode::kInvalidArgument);
  EXPECT_EQ(parse_code(R"({"pipeline": {"iterationz": 3}})"), ErrorCode::kInvalidArgument);
  EXPECT_EQ(parse_code(R"({"pipeline": {"iterations": 2.5}})"), ErrorCode::kInvalidArgument);
  EXPECT_EQ(parse_code(R"({"pipeline": {"provider": "network"}})"), ErrorCode::kInvalidArgument);
  EXPECT_EQ(parse_code(R"({"pipeline": {"neighborhood": 30}})"), ErrorCode::kInvalidArgument);
  EXPECT_EQ(parse_code(R"({"seed": -1})"), ErrorCode::kInvalidArgument);
  EXPECT_EQ(parse_code(R"({"homography": {"scale": 1.5}})"), ErrorCode::kInvalidArgument);
  EXPECT_EQ(parse_code(R"([1, 2])"), ErrorCode::kInvalidArgument);
}

TEST(Cli, UnknownSubcommand) {
  const CliRun r = run({"frobnicate"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({}).code, 1);
}

TEST(Cli, EvalAteOnIdenticalFiles) {
  const fs::path dir = scratch("eval");
  Trajectory t;
  for (int i = 0; i < 10; ++i) t.push_back(i, se3_exp((Twist() << 0.1 * i, 0.02 * i * i, 0, 0, 0.05 * i, 0).finished()));
  write_trajectory(t, dir / "a.txt");
  for (const char* mode : {"sim3", "se3", "none"}) {
    const CliRun r = run({"eval-ate", "--est", (dir / "a.txt").string(), "--gt", (dir / "a.txt").string(), "--align", mode});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "ATE_RMSE_m 0.000000000") << mode;
  }
  EXPECT_EQ(run({"eval-ate", "--est", (dir / "a.txt").string(), "--gt", (dir / "a.txt").string(), "--align", "x"}).code, 1);
  EXPECT_EQ(run({"eval-ate", "--est", (dir / "missing.txt").string(), "--gt", (dir / "a.txt").string()}).code, 1);
}

TEST(Cli, ValidationFailureWritesNothing) {
  const fs::path dir = scratch("invalid");
  write_file(dir / "bad.json", R"({"pipeline": {"bogus": true}})");
  write_image(Image(32, 32, 1, 100.0f), dir / "im.pgm");
  const CliRun a = run({"select-patches", "--config", (dir / "bad.json").string(), "--image", (dir / "im.pgm").string(),
                     "--out", (dir / "out" / "c.csv").string()});
  EXPECT_EQ(a.code, 1);
  const CliRun b = run({"gen-homography", "--config", (dir / "bad.json").string(), "--image", (dir / "im.pgm").string(),
                     "--out", (dir / "gen").string()});
  EXPECT_EQ(b.code, 1);
  const CliRun c = run({"run-vo", "--config", (dir / "bad.json").string(), "--images", dir.string(), "--out",
                     (dir / "vo" / "t.txt").string()});
  EXPECT_EQ(c.code, 1);
  EXPECT_FALSE(fs::exists(dir / "out"));
  EXPECT_FALSE(fs::exists(dir / "gen"));
  EXPECT_FALSE(fs::exists(dir / "vo"));
}

TEST(Cli, RunVoNeedsGroundTruthForOracle) {
  const fs::path dir = scratch("no_truth");
  write_image(Image(32, 32, 1, 50.0f), dir / "a.pgm");
  write_image(Image(32, 32, 1, 60.0f), dir / "b.pgm");
  write_file(dir / "manifest.json",
             R"({"frames": ["a.pgm", "b.pgm"], "intrinsics": {"fx": 30, "fy": 30, "cx": 16, "cy": 16}})");
  const CliRun r = run({"run-vo", "--images", dir.string(), "--out", (dir / "out" / "t.txt").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("oracle"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, ThreadCapMustBeNumeric) {
  const fs::path dir = scratch("threads");
  write_image(Image(32, 32, 1, 100.0f), dir / "im.pgm");
  setenv("SVO_THREADS", "many", 1);
  const CliRun r = run({"gen-homography", "--image", (dir / "im.pgm").string(), "--out", (dir / "gen").string()});
  unsetenv("SVO_THREADS");
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(fs::exists(dir / "gen"));
}

TEST(Cli, SelectPatchesCsv) {
  const fs::path dir = scratch("select");
  Image im(64, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) im.at(x, y) = static_cast<float>((x * 37 + y * 91) % 256);
  write_image(im, dir / "im.pgm");
  write_file(dir / "c.json", R"({"pipeline": {"patches_per_frame": 10, "random_patches": 4}})");
  const CliRun r = run({"select-patches", "--config", (dir / "c.json").string(), "--image", (dir / "im.pgm").string(),
                     "--out", (dir / "centers.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(read_file(dir / "centers.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "x,y,score,label");
  int rows = 0, random = 0;
  while (std::getline(csv, line)) {
    ++rows;
    if (line.ends_with(",random")) ++random;
  }
  EXPECT_EQ(rows, 10);
  EXPECT_EQ(random, 4);
  EXPECT_TRUE(fs::exists(dir / "resolved_config.json"));
}

TEST(Cli, GenHomographyArtifacts) {
  const fs::path dir = scratch("gen");
  Image im(64, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) im.at(x, y) = static_cast<float>(128 + 100 * std::sin(0.3 * x) * std::cos(0.2 * y));
  write_image(im, dir / "im.pgm");
  write_file(dir / "c.json", R"({"seed": 3, "homography": {"length": 3}, "patch_set": {"salient": 8, "random": 4}})");
  const CliRun r = run({"gen-homography", "--config", (dir / "c.json").string(), "--image", (dir / "im.pgm").string(),
                     "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto manifest = nlohmann::json::parse(read_file(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 3);
  EXPECT_EQ(manifest["frames"].size(), 4u);
  EXPECT_EQ(manifest["masks"].size(), 3u);
  for (const auto& f : manifest["frames"]) EXPECT_TRUE(fs::exists(dir / "out" / f.get<std::string>()));
  for (const auto& f : manifest["masks"]) {
    const Image mask = read_image(dir / "out" / f.get<std::string>());
    for (float v : mask.data()) EXPECT_TRUE(v == 0.0f || v == 255.0f);
  }
  std::istringstream hs(read_file(dir / "out" / "homographies.csv"));
  std::string line;
  int rows = 0;
  std::getline(hs, line);
  while (std::getline(hs, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 8);
  }
  EXPECT_EQ(rows, 3);
  std::istringstream cs(read_file(dir / "out" / "correspondences.csv"));
  std::getline(cs, line);
  EXPECT_EQ(line, "t,point_id,x,y,visible");
  rows = 0;
  while (std::getline(cs, line)) ++rows;
  EXPECT_EQ(rows, 4 * 12);
}

TEST(Dataset, ManifestValidation) {
  const fs::path dir = scratch("manifest");
  write_image(Image(20, 20), dir / "a.pgm");
  write_file(dir / "manifest.json", R"({"frames": ["a.pgm", "b.pgm"], "intrinsics": {"fx": 1, "fy": 1, "cx": 0, "cy": 0}})");
  EXPECT_THROW(read_dataset(dir), Error);
  write_file(dir / "manifest.json", R"({"frames": ["a.pgm"], "intrinsics": {"fx": 1, "fy": 1, "cx": 0, "cy": 0}, "extra": 1})");
  EXPECT_THROW(read_dataset(dir), Error);
  write_file(dir / "manifest.json", R"({"frames": ["a.pgm"], "intrinsics": {"fx": -1, "fy": 1, "cx": 0, "cy": 0}})");
  EXPECT_THROW(read_dataset(dir), Error);
  write_file(dir / "manifest.json", R"({"frames": ["a.pgm"], "intrinsics": {"fx": 1, "fy": 1, "cx": 0, "cy": 0}, "timestamps": [0.5]})");
  const Dataset d = read_dataset(dir);
  EXPECT_EQ(d.frames.size(), 1u);
  EXPECT_EQ(d.timestamps, std::vector<double>{0.5});
}

TEST(Dataset, SceneJsonRoundTrip) {
  RoomScene s;
  s.width = 80;
  s.texture_seed = 11;
  const RoomScene back = scene_from_json(scene_to_json(s));
  EXPECT_EQ(back.width, 80);
  EXPECT_EQ(back.height, s.height);
  EXPECT_EQ(back.texture_seed, 11u);
  EXPECT_EQ(back.intrinsics.fx, s.intrinsics.fx);
}
