#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "svo/correlation.hpp"
#include "svo/geometry.hpp"
#include "svo/image.hpp"

namespace svo {

// Axis-aligned room x in [-2, 2], y in [-1.2, 1.0] (y down), z in [-2, 4],
// every face covered with smooth procedural value noise.
struct RoomScene {
  int width = 160;
  int height = 120;
  Intrinsics intrinsics{150.0, 150.0, 79.5, 59.5};
  std::uint64_t texture_seed = 7;
};

struct RayHit {
  Vec3 point = Vec3::Zero();  // world coordinates
  double depth = 0.0;         // along the camera z axis
  int face = -1;
};

// First intersection of the ray through `pixel` of a camera at `pose`.
std::optional<RayHit> raycast(const RoomScene& scene, const Pose& pose, const Vec2& pixel);

// Texture value in [0, 1] of a point on `face`.
double room_texture(const RoomScene& scene, int face, const Vec3& point);

// Grayscale rendering, intensities in 0..255 (not quantised).
Image render(const RoomScene& scene, const Pose& pose);

enum class MotionKind { kSmooth, kStatic };

// Ground-truth world-from-camera poses; the first is the identity.
std::vector<Pose> room_trajectory(int frames, MotionKind kind = MotionKind::kSmooth);

// Exact correspondences by ray casting in a room observed from known poses.
class RoomGroundTruth final : public GroundTruthSource {
 public:
  RoomGroundTruth(RoomScene scene, std::vector<Pose> poses)
      : scene_(std::move(scene)), poses_(std::move(poses)) {}

  std::optional<OracleTarget> locate(int source_frame, const Vec2& pixel,
                                     int target_frame) const override;

  const RoomScene& scene() const { return scene_; }
  const std::vector<Pose>& poses() const { return poses_; }

 private:
  RoomScene scene_;
  std::vector<Pose> poses_;
};

}  // namespace svo
