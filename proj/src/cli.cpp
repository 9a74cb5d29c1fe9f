#include "svo/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "svo/config.hpp"
#include "svo/dataset.hpp"
#include "svo/error.hpp"
#include "svo/homography.hpp"
#include "svo/io.hpp"
#include "svo/losses.hpp"
#include "svo/pipeline.hpp"
#include "svo/random.hpp"
#include "svo/selfcheck.hpp"

namespace svo {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Thrown during the checking phase; maps to exit code 1.
struct ValidationFailure {
  std::string message;
};

template <typename Fn>
auto checked(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw ValidationFailure{e.what()};
  } catch (const json::exception& e) {
    throw ValidationFailure{e.what()};
  }
}

RunConfig load_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return checked([&] {
    json j;
    try {
      j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParseError, path + ": " + e.what());
    }
    return parse_run_config(j);
  });
}

// SVO_THREADS caps the configured worker count; 0 or unset leaves it alone.
int apply_thread_cap(int configured) {
  const char* env = std::getenv("SVO_THREADS");
  if (env == nullptr || *env == '\0') return configured;
  char* end = nullptr;
  const long cap = std::strtol(env, &end, 10);
  if (*end != '\0' || cap < 0 || cap > 4096) {
    throw ValidationFailure{std::string("SVO_THREADS must be a non-negative integer, got '") + env + "'"};
  }
  if (cap == 0) return configured;
  return configured == 0 ? static_cast<int>(cap) : std::min(configured, static_cast<int>(cap));
}

void check_output_target(const fs::path& path, bool directory) {
  if (path.empty()) throw ValidationFailure{"output path is empty"};
  if (directory) {
    if (fs::exists(path) && !fs::is_directory(path)) {
      throw ValidationFailure{path.string() + " exists and is not a directory"};
    }
  } else if (fs::is_directory(path)) {
    throw ValidationFailure{path.string() + " is a directory"};
  }
}

void ensure_parent(const fs::path& file) {
  const fs::path parent = file.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string fixed9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---- run-vo

struct RunVoArgs {
  std::string config;
  std::string images;
  std::string out;
};

int run_vo(const RunVoArgs& args, std::ostream& out) {
  RunConfig cfg = load_config(args.config);
  cfg.pipeline.threads = apply_thread_cap(cfg.pipeline.threads);
  const fs::path out_path = args.out;
  check_output_target(out_path, false);

  const Dataset data = checked([&] { return read_dataset(args.images); });
  const std::vector<Image> frames = checked([&] { return load_frames(data); });
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].width() != frames[0].width() || frames[i].height() != frames[0].height()) {
      throw ValidationFailure{data.frames[i].string() + ": frame size differs from the first frame"};
    }
  }
  if (frames[0].width() < 16 || frames[0].height() < 16) {
    throw ValidationFailure{"frames must be at least 16 x 16"};
  }

  std::unique_ptr<RoomGroundTruth> truth;
  if (cfg.pipeline.provider == ProviderKind::kOracle) {
    if (!data.scene || !data.ground_truth) {
      throw ValidationFailure{"the oracle provider needs 'scene' and 'ground_truth' in the manifest"};
    }
    checked([&] {
      const RoomScene scene = scene_from_json(json::parse(read_file(*data.scene)));
      const Trajectory gt = read_trajectory(*data.ground_truth);
      if (gt.size() != frames.size()) {
        throw Error(ErrorCode::kInvalidArgument, "ground truth has " + std::to_string(gt.size()) +
                                                     " poses for " + std::to_string(frames.size()) +
                                                     " frames");
      }
      truth = std::make_unique<RoomGroundTruth>(scene, gt.poses());
      return 0;
    });
  }

  const Trajectory est = run_sequence(frames, data.intrinsics, cfg.pipeline, truth.get());
  const Trajectory stamped = stamp_trajectory(est.poses(), data.timestamps);
  ensure_parent(out_path);
  write_trajectory(stamped, out_path);
  write_file(out_path.parent_path() / "resolved_config.json", dump_json(to_json(cfg)));
  out << "wrote " << stamped.size() << " poses to " << out_path.string() << "\n";
  return kExitOk;
}

// ---- gen-homography

struct GenArgs {
  std::string config;
  std::string image;
  std::string out;
};

std::string frame_name(const char* prefix, int t, const Image& im) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03d.%s", prefix, t, im.channels() == 1 ? "pgm" : "ppm");
  return buf;
}

int gen_homography(const GenArgs& args, std::ostream& out) {
  RunConfig cfg = load_config(args.config);
  cfg.pipeline.threads = apply_thread_cap(cfg.pipeline.threads);
  const fs::path dir = args.out;
  check_output_target(dir, true);
  const Image base = checked([&] { return read_image(args.image); });
  if (base.width() < 16 || base.height() < 16) throw ValidationFailure{"image must be at least 16 x 16"};

  const FeatureMap features = extract_features(base.to_gray(), cfg.pipeline.features);
  const PatchSelection sel =
      choose_patches(features, base.width(), base.height(), cfg.patch_set.salient,
                     cfg.patch_set.random, cfg.pipeline, derive_seed(cfg.seed, 0x70617463ULL));
  std::vector<Vec2> points;
  for (const PatchCenter& c : sel.set.centers) points.emplace_back(c.x, c.y);

  const HomographySequence seq = generate_sequence(base, cfg.homography.schedule.length,
                                                   cfg.homography, derive_seed(cfg.seed, 0x686f6d6fULL));
  const Correspondences corr = gt_correspondence(seq, points);

  fs::create_directories(dir);
  json frames = json::array();
  json masks = json::array();
  write_image(seq.base, dir / frame_name("frame", 0, seq.base));
  frames.push_back(frame_name("frame", 0, seq.base));
  for (int t = 1; t <= seq.length(); ++t) {
    const Image& f = seq.frames[t - 1];
    write_image(f, dir / frame_name("frame", t, f));
    frames.push_back(frame_name("frame", t, f));
    Image mask(f.width(), f.height());
    const OcclusionRegion& occ = seq.occlusions[t - 1];
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x) mask.at(x, y) = occ.contains(x, y) ? 255.0f : 0.0f;
    write_image(mask, dir / frame_name("mask", t, mask));
    masks.push_back(frame_name("mask", t, mask));
  }

  std::ostringstream hs;
  hs << "h00,h01,h02,h10,h11,h12,h20,h21,h22\n";
  for (const Homography& h : seq.homographies) {
    for (int i = 0; i < 9; ++i) hs << exact(h(i / 3, i % 3)) << (i == 8 ? "\n" : ",");
  }
  write_file(dir / "homographies.csv", hs.str());

  std::ostringstream cs;
  cs << "t,point_id,x,y,visible\n";
  for (std::size_t l = 0; l < points.size(); ++l) {
    cs << 0 << ',' << l << ',' << fixed9(points[l].x()) << ',' << fixed9(points[l].y()) << ",1\n";
  }
  for (int t = 1; t <= seq.length(); ++t) {
    for (std::size_t l = 0; l < points.size(); ++l) {
      const Vec2& p = corr.positions[t - 1][l];
      cs << t << ',' << l << ',' << fixed9(p.x()) << ',' << fixed9(p.y()) << ','
         << (corr.visibility.visible(t - 1, static_cast<int>(l)) ? 1 : 0) << "\n";
    }
  }
  write_file(dir / "correspondences.csv", cs.str());

  std::ostringstream ps;
  ps << "point_id,x,y,score,label\n";
  for (std::size_t l = 0; l < sel.set.centers.size(); ++l) {
    const PatchCenter& c = sel.set.centers[l];
    ps << l << ',' << c.x << ',' << c.y << ',' << fixed9(sel.scores[l]) << ',' << label_name(c.label)
       << "\n";
  }
  write_file(dir / "patches.csv", ps.str());

  const json resolved = to_json(cfg);
  write_file(dir / "resolved_config.json", dump_json(resolved));
  const json manifest = {{"seed", cfg.seed},
                         {"source_image", fs::path(args.image).filename().string()},
                         {"frames", frames},
                         {"masks", masks},
                         {"homographies", "homographies.csv"},
                         {"correspondences", "correspondences.csv"},
                         {"patches", "patches.csv"},
                         {"resolved_config", "resolved_config.json"},
                         {"config", resolved}};
  write_file(dir / "manifest.json", dump_json(manifest));
  out << "wrote " << seq.length() << " frames and " << points.size() << " tracked points to "
      << dir.string() << "\n";
  return kExitOk;
}

// ---- select-patches

struct SelectArgs {
  std::string config;
  std::string image;
  std::string out;
};

int select_patches(const SelectArgs& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(args.config);
  const fs::path out_path = args.out;
  check_output_target(out_path, false);
  const Image image = checked([&] { return read_image(args.image); });
  if (image.width() < 16 || image.height() < 16) throw ValidationFailure{"image must be at least 16 x 16"};

  const PipelineConfig& p = cfg.pipeline;
  const FeatureMap features = extract_features(image.to_gray(), p.features);
  const PatchSelection sel =
      choose_patches(features, image.width(), image.height(), p.patches_per_frame - p.random_patches,
                     p.random_patches, p, derive_seed(cfg.seed, 0x70617463ULL));
  if (sel.shortfall) err << "warning: fewer salient centers than requested; filled with random ones\n";

  std::ostringstream cs;
  cs << "x,y,score,label\n";
  for (std::size_t i = 0; i < sel.set.centers.size(); ++i) {
    const PatchCenter& c = sel.set.centers[i];
    cs << c.x << ',' << c.y << ',' << fixed9(sel.scores[i]) << ',' << label_name(c.label) << "\n";
  }
  ensure_parent(out_path);
  write_file(out_path, cs.str());
  write_file(out_path.parent_path() / "resolved_config.json", dump_json(to_json(cfg)));
  out << "wrote " << sel.set.centers.size() << " centers to " << out_path.string() << "\n";
  return kExitOk;
}

// ---- eval-ate

struct EvalArgs {
  std::string est;
  std::string gt;
  std::string align = "sim3";
};

int eval_ate(const EvalArgs& args, std::ostream& out) {
  AlignMode mode = AlignMode::kSim3;
  if (args.align == "se3") {
    mode = AlignMode::kSe3;
  } else if (args.align == "none") {
    mode = AlignMode::kNone;
  } else if (args.align != "sim3") {
    throw ValidationFailure{"--align must be sim3, se3 or none"};
  }
  const Trajectory est = checked([&] { return read_trajectory(args.est); });
  const Trajectory gt = checked([&] { return read_trajectory(args.gt); });
  const auto pairs = associate(est, gt);
  if (pairs.size() < 3) {
    throw ValidationFailure{"only " + std::to_string(pairs.size()) +
                            " timestamp matches within 0.02 s; need at least 3"};
  }
  const double ate = ate_rmse(est, gt, mode);

  // Consecutive associated poses form the pose-loss pairs, compared after the
  // same alignment as the ATE.
  std::vector<Pose> g, e;
  std::vector<Vec3> est_points, gt_points;
  for (const auto& [i, j] : pairs) {
    est_points.push_back(est[i].pose.translation());
    gt_points.push_back(gt[j].pose.translation());
  }
  Sim3Alignment a;
  if (mode != AlignMode::kNone) a = umeyama_align(est_points, gt_points, mode == AlignMode::kSim3);
  for (const auto& [i, j] : pairs) {
    const Pose& p = est[i].pose;
    e.emplace_back(a.rotation * p.rotation(), a.apply(p.translation()));
    g.push_back(gt[j].pose);
  }
  std::vector<std::pair<int, int>> consecutive;
  for (int k = 0; k + 1 < static_cast<int>(pairs.size()); ++k) consecutive.emplace_back(k, k + 1);
  const double loss = pose_loss(g, e, consecutive);

  out << "ATE_RMSE_m " << fixed9(ate) << "\n";
  out << "pose_loss " << fixed9(loss) << "\n";
  return kExitOk;
}

// ---- selfcheck

int selfcheck(std::ostream& out) {
  int failed = 0;
  for (const CheckResult& r : run_selfcheck()) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    if (!r.passed) ++failed;
  }
  out << (failed == 0 ? "selfcheck passed\n" : "selfcheck failed\n");
  return failed == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse patch-based visual odometry tools", "svo"};
  app.require_subcommand(1);

  RunVoArgs vo;
  auto* run_cmd = app.add_subcommand("run-vo", "Estimate a trajectory for an image directory");
  run_cmd->add_option("--config", vo.config, "JSON config file");
  run_cmd->add_option("--images", vo.images, "Directory with manifest.json")->required();
  run_cmd->add_option("--out", vo.out, "Output TUM trajectory")->required();

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-homography", "Generate a homography training sequence");
  gen_cmd->add_option("--config", gen.config, "JSON config file");
  gen_cmd->add_option("--image", gen.image, "Base PGM/PPM image")->required();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  SelectArgs sel;
  auto* sel_cmd = app.add_subcommand("select-patches", "Pick salient and random patch centers");
  sel_cmd->add_option("--config", sel.config, "JSON config file");
  sel_cmd->add_option("--image", sel.image, "PGM/PPM image")->required();
  sel_cmd->add_option("--out", sel.out, "Output CSV")->required();

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval-ate", "Absolute trajectory error of a TUM trajectory");
  ev_cmd->add_option("--est", ev.est, "Estimated trajectory")->required();
  ev_cmd->add_option("--gt", ev.gt, "Ground-truth trajectory")->required();
  ev_cmd->add_option("--align", ev.align, "sim3, se3 or none")->capture_default_str();

  auto* check_cmd = app.add_subcommand("selfcheck", "Run the built-in invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (*run_cmd) return run_vo(vo, out);
    if (*gen_cmd) return gen_homography(gen, out);
    if (*sel_cmd) return select_patches(sel, out, err);
    if (*ev_cmd) return eval_ate(ev, out);
    if (*check_cmd) return selfcheck(out);
  } catch (const ValidationFailure& e) {
    err << "error: " << e.message << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace svo
