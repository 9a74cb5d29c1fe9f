#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "svo/eval.hpp"
#include "svo/geometry.hpp"
#include "svo/image.hpp"
#include "svo/synthetic.hpp"

namespace svo {

// Image directory described by manifest.json:
//   {"frames": ["000.pgm", ...], "intrinsics": {"fx":..,"fy":..,"cx":..,"cy":..},
//    "timestamps": [...], "scene": "scene.json", "ground_truth": "gt.txt"}
// timestamps, scene and ground_truth are optional; stamps default to frame indices.
struct Dataset {
  std::filesystem::path root;
  std::vector<std::filesystem::path> frames;  // resolved against root
  Intrinsics intrinsics;
  std::vector<double> timestamps;
  std::optional<std::filesystem::path> scene;
  std::optional<std::filesystem::path> ground_truth;
};

// Validates the manifest and that every referenced file exists. Throws
// Error(kInvalidArgument) or Error(kIoError).
Dataset read_dataset(const std::filesystem::path& dir);

std::vector<Image> load_frames(const Dataset& dataset);

nlohmann::json intrinsics_to_json(const Intrinsics& k);
Intrinsics intrinsics_from_json(const nlohmann::json& j);

nlohmann::json scene_to_json(const RoomScene& scene);
RoomScene scene_from_json(const nlohmann::json& j);

// Stamps the i-th pose with timestamps[i] (or i when none are given).
Trajectory stamp_trajectory(const std::vector<Pose>& poses, const std::vector<double>& timestamps);

// Renders the room along a ground-truth trajectory into `dir`: quantised PGM
// frames, gt.txt, scene.json and manifest.json.
void write_room_dataset(const std::filesystem::path& dir, const RoomScene& scene, int frames,
                        MotionKind kind);

// Pretty JSON with a trailing newline.
std::string dump_json(const nlohmann::json& j);

}  // namespace svo
