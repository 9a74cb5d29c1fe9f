#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <vector>

namespace svo {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat26 = Eigen::Matrix<double, 2, 6>;

// Tangent-space coordinates of SE(3), ordered (vx, vy, vz, wx, wy, wz).
using Twist = Vec6;

Mat3 hat(const Vec3& w);
Mat4 hat(const Twist& xi);

// Rigid transform stored as a unit quaternion plus translation. Poses in this
// library are world-from-camera.
class Pose {
 public:
  Pose() : rotation_(Eigen::Quaterniond::Identity()), translation_(Vec3::Zero()) {}
  Pose(const Eigen::Quaterniond& rotation, const Vec3& translation);
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose Identity() { return Pose(); }
  static Pose FromMatrix(const Mat4& m);

  const Eigen::Quaterniond& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Mat3 rotation_matrix() const { return rotation_.toRotationMatrix(); }
  Mat4 matrix() const;

  Pose inverse() const;
  Pose operator*(const Pose& other) const;
  Vec3 operator*(const Vec3& point) const { return rotation_ * point + translation_; }

  // Rotation angle in [0, pi].
  double angle() const;

 private:
  Eigen::Quaterniond rotation_;
  Vec3 translation_;
};

Pose se3_exp(const Twist& xi);

// Throws Error(kAngleNearPi) when the rotation angle is >= pi - 1e-6.
Twist se3_log(const Pose& pose);

// Rotation part only.
Eigen::Quaterniond so3_exp(const Vec3& w);
Vec3 so3_log(const Eigen::Quaterniond& q);

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Mat3 matrix() const;
  // Throws Error(kInvalidArgument) unless fx, fy > 0 and all values finite.
  void validate() const;
};

// Square block of (2r+1)^2 pixels around an integer center, sharing one
// inverse depth (1/m).
struct Patch {
  int frame_id = 0;
  Vec2 center = Vec2::Zero();
  int radius = 1;
  double inv_depth = 1.0;

  int side() const { return 2 * radius + 1; }
  int pixel_count() const { return side() * side(); }
  // Pixel coordinates, row-major: offset w2 (y) outer, w1 (x) inner.
  std::vector<Vec2> pixels() const;
};

// Depth below which a transformed point counts as behind the camera.
inline constexpr double kMinDepth = 1e-6;

// target_from_source, as used by every reprojection.
struct RelativePose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

RelativePose relative_pose(const Pose& source, const Pose& target);

struct Reprojection {
  std::vector<Vec2> coords;  // same order as Patch::pixels()
  bool valid = true;         // false when any point is behind the target camera
};

// Maps every patch pixel [x+w1, y+w2, 1, d] of the source frame into the
// target frame using the relative transform target_from_world * world_from_source.
Reprojection reproject_patch(const Patch& patch, const Pose& source, const Pose& target,
                             const Intrinsics& K);
Reprojection reproject_patch(const Patch& patch, const RelativePose& rel, const Intrinsics& K);

// Derivatives of one reprojected pixel. Pose columns are w.r.t. right-multiplied
// twists T <- T * exp(xi) on the source and target poses.
struct PointJacobian {
  Vec2 coord = Vec2::Zero();
  Mat26 d_source = Mat26::Zero();
  Mat26 d_target = Mat26::Zero();
  Vec2 d_inv_depth = Vec2::Zero();
  bool valid = true;
};


// Single-point reprojection with Jacobians; shared by reprojection_jacobian and
// the bundle adjuster.
PointJacobian reproject_point(const Vec2& pixel, double inv_depth, const Pose& source,
                              const Pose& target, const Intrinsics& K);
PointJacobian reproject_point(const Vec2& pixel, double inv_depth, const RelativePose& rel,
                              const Intrinsics& K);

// Position only; false when the point lands behind the target camera.
bool project_point(const Vec2& pixel, double inv_depth, const RelativePose& rel,
                   const Intrinsics& K, Vec2& out);

struct PatchJacobian {
  std::vector<PointJacobian> points;  // same order as Patch::pixels()
  bool valid = true;
};

PatchJacobian reprojection_jacobian(const Patch& patch, const Pose& source, const Pose& target,
                                    const Intrinsics& K);

}  // namespace svo
