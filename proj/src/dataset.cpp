#include "svo/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <string>

#include "svo/error.hpp"
#include "svo/io.hpp"

namespace svo {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

void only_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) bad(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) bad(where + ": unknown key '" + key + "'");
  }
}

double number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) bad(where + ": missing '" + key + "'");
  if (!j[key].is_number()) bad(where + "." + key + ": expected a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) bad(where + "." + key + ": expected a finite number");
  return v;
}

std::filesystem::path existing(const std::filesystem::path& root, const json& v,
                               const std::string& where) {
  if (!v.is_string()) bad(where + ": expected a file name");
  const auto p = root / v.get<std::string>();
  if (!std::filesystem::is_regular_file(p)) {
    throw Error(ErrorCode::kIoError, where + ": no such file " + p.string());
  }
  return p;
}

}  // namespace

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

json intrinsics_to_json(const Intrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}};
}

Intrinsics intrinsics_from_json(const json& j) {
  only_keys(j, "intrinsics", {"fx", "fy", "cx", "cy"});
  Intrinsics k{number(j, "fx", "intrinsics"), number(j, "fy", "intrinsics"),
               number(j, "cx", "intrinsics"), number(j, "cy", "intrinsics")};
  k.validate();
  return k;
}

json scene_to_json(const RoomScene& scene) {
  return {{"width", scene.width},
          {"height", scene.height},
          {"intrinsics", intrinsics_to_json(scene.intrinsics)},
          {"texture_seed", scene.texture_seed}};
}

RoomScene scene_from_json(const json& j) {
  only_keys(j, "scene", {"width", "height", "intrinsics", "texture_seed"});
  RoomScene s;
  for (const char* key : {"width", "height"}) {
    if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() < 16) {
      bad(std::string("scene.") + key + ": expected an integer >= 16");
    }
  }
  s.width = j["width"].get<int>();
  s.height = j["height"].get<int>();
  if (!j.contains("intrinsics")) bad("scene: missing 'intrinsics'");
  s.intrinsics = intrinsics_from_json(j["intrinsics"]);
  if (j.contains("texture_seed")) {
    if (!j["texture_seed"].is_number_unsigned()) {
      bad("scene.texture_seed: expected a non-negative integer");
    }
    s.texture_seed = j["texture_seed"].get<std::uint64_t>();
  }
  return s;
}

Dataset read_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  json j;
  try {
    j = json::parse(read_file(manifest_path));
  } catch (const json::parse_error& e) {
    bad(manifest_path.string() + ": " + e.what());
  }
  only_keys(j, "manifest", {"frames", "intrinsics", "timestamps", "scene", "ground_truth"});
  Dataset d;
  d.root = dir;
  if (!j.contains("frames") || !j["frames"].is_array() || j["frames"].empty()) {
    bad("manifest.frames: expected a non-empty array of file names");
  }
  for (std::size_t i = 0; i < j["frames"].size(); ++i) {
    d.frames.push_back(existing(dir, j["frames"][i], "manifest.frames[" + std::to_string(i) + "]"));
  }
  if (!j.contains("intrinsics")) bad("manifest: missing 'intrinsics'");
  d.intrinsics = intrinsics_from_json(j["intrinsics"]);
  if (j.contains("timestamps")) {
    const json& t = j["timestamps"];
    if (!t.is_array() || t.size() != d.frames.size()) {
      bad("manifest.timestamps: expected one number per frame");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!t[i].is_number()) bad("manifest.timestamps[" + std::to_string(i) + "]: expected a number");
      const double v = t[i].get<double>();
      if (!d.timestamps.empty() && !(v > d.timestamps.back())) {
        throw Error(ErrorCode::kNonMonotoneTimestamps,
                    "manifest.timestamps[" + std::to_string(i) + "] is not increasing");
      }
      d.timestamps.push_back(v);
    }
  }
  if (j.contains("scene")) d.scene = existing(dir, j["scene"], "manifest.scene");
  if (j.contains("ground_truth")) {
    d.ground_truth = existing(dir, j["ground_truth"], "manifest.ground_truth");
  }
  return d;
}

std::vector<Image> load_frames(const Dataset& dataset) {
  std::vector<Image> frames;
  frames.reserve(dataset.frames.size());
  for (const auto& p : dataset.frames) frames.push_back(read_image(p));
  return frames;
}

Trajectory stamp_trajectory(const std::vector<Pose>& poses, const std::vector<double>& timestamps) {
  if (!timestamps.empty() && timestamps.size() != poses.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one timestamp per pose required");
  }
  Trajectory t;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    t.push_back(timestamps.empty() ? static_cast<double>(i) : timestamps[i], poses[i]);
  }
  return t;
}

void write_room_dataset(const std::filesystem::path& dir, const RoomScene& scene, int frames,
                        MotionKind kind) {
  std::filesystem::create_directories(dir);
  const auto poses = room_trajectory(frames, kind);
  json names = json::array();
  for (int i = 0; i < frames; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%03d.pgm", i);
    write_image(render(scene, poses[i]), dir / name);
    names.push_back(name);
  }
  write_trajectory(stamp_trajectory(poses, {}), dir / "gt.txt");
  write_file(dir / "scene.json", dump_json(scene_to_json(scene)));
  const json manifest = {{"frames", names},
                         {"intrinsics", intrinsics_to_json(scene.intrinsics)},
                         {"scene", "scene.json"},
                         {"ground_truth", "gt.txt"}};
  write_file(dir / "manifest.json", dump_json(manifest));
}

}  // namespace svo
