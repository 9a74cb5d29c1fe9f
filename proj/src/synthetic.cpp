#include "svo/synthetic.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "svo/error.hpp"
#include "svo/random.hpp"

namespace svo {

namespace {

struct Face {
  int axis;
  double value;
};

constexpr Face kFaces[6] = {{0, -2.0}, {0, 2.0}, {1, -1.2}, {1, 1.0}, {2, -2.0}, {2, 4.0}};

double lattice(std::uint64_t seed, int face, long i, long j) {
  const std::uint64_t h = derive_seed(seed, static_cast<std::uint64_t>(face),
                                      static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double value_noise(std::uint64_t seed, int face, double u, double v) {
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  const long i = static_cast<long>(fu);
  const long j = static_cast<long>(fv);
  auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
  const double a = smooth(u - fu);
  const double b = smooth(v - fv);
  const double v00 = lattice(seed, face, i, j);
  const double v10 = lattice(seed, face, i + 1, j);
  const double v01 = lattice(seed, face, i, j + 1);
  const double v11 = lattice(seed, face, i + 1, j + 1);
  return (1 - b) * ((1 - a) * v00 + a * v10) + b * ((1 - a) * v01 + a * v11);
}

}  // namespace

std::optional<RayHit> raycast(const RoomScene& scene, const Pose& pose, const Vec2& pixel) {
  const Intrinsics& k = scene.intrinsics;
  const Vec3 dir_cam((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy, 1.0);
  const Vec3 dir = pose.rotation() * dir_cam;
  const Vec3& origin = pose.translation();
  RayHit best;
  best.depth = std::numeric_limits<double>::infinity();
  for (int f = 0; f < 6; ++f) {
    const double d = dir(kFaces[f].axis);
    if (std::abs(d) < 1e-15) continue;
    const double s = (kFaces[f].value - origin(kFaces[f].axis)) / d;
    if (s > 0.0 && s < best.depth) {
      best.depth = s;
      best.face = f;
    }
  }
  if (best.face < 0) return std::nullopt;
  best.point = origin + best.depth * dir;
  best.point(kFaces[best.face].axis) = kFaces[best.face].value;
  return best;
}

double room_texture(const RoomScene& scene, int face, const Vec3& point) {
  const int axis = kFaces[face].axis;
  const double u = point((axis + 1) % 3);
  const double v = point((axis + 2) % 3);
  constexpr double kScales[3] = {0.5, 0.2, 0.08};
  constexpr double kAmps[3] = {0.45, 0.35, 0.2};
  double out = 0.0;
  for (int o = 0; o < 3; ++o) {
    out += kAmps[o] * value_noise(scene.texture_seed + o, face, u / kScales[o], v / kScales[o]);
  }
  return out;
}

Image render(const RoomScene& scene, const Pose& pose) {
  scene.intrinsics.validate();
  Image img(scene.width, scene.height, 1);
  for (int y = 0; y < scene.height; ++y) {
    for (int x = 0; x < scene.width; ++x) {
      const auto hit = raycast(scene, pose, Vec2(x, y));
      img.at(x, y) = hit ? static_cast<float>(20.0 + 215.0 * room_texture(scene, hit->face, hit->point))
                         : 0.0f;
    }
  }
  return img;
}

std::vector<Pose> room_trajectory(int frames, MotionKind kind) {
  if (frames < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one frame");
  std::vector<Pose> out;
  out.reserve(frames);
  constexpr double kPi = std::numbers::pi;
  for (int k = 0; k < frames; ++k) {
    if (kind == MotionKind::kStatic) {
      out.push_back(Pose::Identity());
      continue;
    }
    const double s = frames > 1 ? static_cast<double>(k) / (frames - 1) : 0.0;
    const Vec3 t(0.6 * s, 0.05 * std::sin(2 * kPi * s), 0.3 * s);
    const Vec3 w(0.03 * std::sin(2 * kPi * s), 0.1 * std::sin(kPi * s), 0.02 * std::sin(kPi * s));
    out.emplace_back(so3_exp(w), t);
  }
  return out;
}

std::optional<OracleTarget> RoomGroundTruth::locate(int source_frame, const Vec2& pixel,
                                                    int target_frame) const {
  const int n = static_cast<int>(poses_.size());
  if (source_frame < 0 || target_frame < 0 || source_frame >= n || target_frame >= n) {
    return std::nullopt;
  }
  const auto hit = raycast(scene_, poses_[source_frame], pixel);
  if (!hit) return std::nullopt;
  const Vec3 pc = poses_[target_frame].inverse() * hit->point;
  if (pc.z() < kMinDepth) return std::nullopt;
  const Intrinsics& k = scene_.intrinsics;
  OracleTarget out;
  out.position = Vec2(k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy);
  const bool inside = out.position.x() >= 0.0 && out.position.y() >= 0.0 &&
                      out.position.x() <= scene_.width - 1 && out.position.y() <= scene_.height - 1;
  out.visible = inside;
  if (inside) {
    const auto back = raycast(scene_, poses_[target_frame], out.position);
    out.visible = back && std::abs(back->depth - pc.z()) <= 1e-6 * pc.z();
  }
  return out;
}

}  // namespace svo
