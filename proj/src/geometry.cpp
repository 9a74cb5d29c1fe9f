#include "svo/geometry.hpp"

#include <cmath>
#include <string>

#include "svo/error.hpp"

namespace svo {

namespace {

constexpr double kNearPiMargin = 1e-6;

// (1 - cos t) / t^2, computed without cancellation.
double coeff_a(double theta) {
  if (theta < 1e-8) return 0.5 - theta * theta / 24.0;
  const double s = std::sin(0.5 * theta);
  return 2.0 * s * s / (theta * theta);
}

// (t - sin t) / t^3
double coeff_b(double theta) {
  const double t2 = theta * theta;
  if (theta < 1e-2) return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  return (theta - std::sin(theta)) / (t2 * theta);
}

// (1 - (t sin t) / (2 (1 - cos t))) / t^2, the W^2 coefficient of V^-1.
double coeff_c(double theta) {
  const double t2 = theta * theta;
  if (theta < 1e-2) return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  const double half = 0.5 * theta;
  return (1.0 - half * std::cos(half) / std::sin(half)) / t2;
}

Mat3 left_jacobian(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 W = hat(w);
  return Mat3::Identity() + coeff_a(theta) * W + coeff_b(theta) * W * W;
}

}  // namespace

Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return m;
}

Mat4 hat(const Twist& xi) {
  Mat4 m = Mat4::Zero();
  m.topLeftCorner<3, 3>() = hat(Vec3(xi.tail<3>()));
  m.topRightCorner<3, 1>() = xi.head<3>();
  return m;
}

Pose::Pose(const Eigen::Quaterniond& rotation, const Vec3& translation)
    : rotation_(rotation.normalized()), translation_(translation) {}

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(Eigen::Quaterniond(rotation).normalized()), translation_(translation) {}

Pose Pose::FromMatrix(const Mat4& m) {
  return Pose(Mat3(m.topLeftCorner<3, 3>()), Vec3(m.topRightCorner<3, 1>()));
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose Pose::inverse() const {
  const Eigen::Quaterniond inv = rotation_.conjugate();
  return Pose(inv, -(inv * translation_));
}

Pose Pose::operator*(const Pose& other) const {
  return Pose(rotation_ * other.rotation_, translation_ + rotation_ * other.translation_);
}

double Pose::angle() const {
  return 2.0 * std::atan2(rotation_.vec().norm(), std::abs(rotation_.w()));
}

Eigen::Quaterniond so3_exp(const Vec3& w) {
  const double theta = w.norm();
  const double half = 0.5 * theta;
  const double k = theta < 1e-8 ? 0.5 - theta * theta / 48.0 : std::sin(half) / theta;
  Eigen::Quaterniond q(std::cos(half), k * w.x(), k * w.y(), k * w.z());
  return q.normalized();
}

Vec3 so3_log(const Eigen::Quaterniond& q_in) {
  Eigen::Quaterniond q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double n = q.vec().norm();
  const double w = q.w();
  double scale;
  if (n < 1e-8) {
    scale = 2.0 / w - 2.0 * n * n / (3.0 * w * w * w);
  } else {
    scale = 2.0 * std::atan2(n, w) / n;
  }
  return scale * q.vec();
}

Pose se3_exp(const Twist& xi) {
  const Vec3 v = xi.head<3>();
  const Vec3 w = xi.tail<3>();
  return Pose(so3_exp(w), left_jacobian(w) * v);
}

Twist se3_log(const Pose& pose) {
  const double theta = pose.angle();
  if (theta >= M_PI - kNearPiMargin) {
    throw Error(ErrorCode::kAngleNearPi,
                "rotation angle " + std::to_string(theta) + " too close to pi");
  }
  const Vec3 w = so3_log(pose.rotation());
  const Mat3 W = hat(w);
  const Mat3 v_inv = Mat3::Identity() - 0.5 * W + coeff_c(w.norm()) * W * W;
  Twist xi;
  xi.head<3>() = v_inv * pose.translation();
  xi.tail<3>() = w;
  return xi;
}

Mat3 Intrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx,
       0.0, fy, cy,
       0.0, 0.0, 1.0;
  return k;
}

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy) ||
      !std::isfinite(cx) || !std::isfinite(cy)) {
    throw Error(ErrorCode::kInvalidArgument, "intrinsics need finite fx > 0, fy > 0");
  }
}

std::vector<Vec2> Patch::pixels() const {
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(pixel_count()));
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      out.emplace_back(center.x() + dx, center.y() + dy);
    }
  }
  return out;
}

RelativePose relative_pose(const Pose& source, const Pose& target) {
  const Pose rel = target.inverse() * source;
  return {rel.rotation_matrix(), rel.translation()};
}

PointJacobian reproject_point(const Vec2& pixel, double inv_depth, const Pose& source,
                              const Pose& target, const Intrinsics& K) {
  return reproject_point(pixel, inv_depth, relative_pose(source, target), K);
}

bool project_point(const Vec2& pixel, double inv_depth, const RelativePose& rel,
                   const Intrinsics& K, Vec2& out) {
  const Vec3 b((pixel.x() - K.cx) / K.fx, (pixel.y() - K.cy) / K.fy, 1.0);
  const Vec3 q = rel.rotation * b + rel.translation * inv_depth;
  if (!(inv_depth > 0.0) || q.z() / inv_depth <= kMinDepth) return false;
  const double iz = 1.0 / q.z();
  out = Vec2(K.fx * q.x() * iz + K.cx, K.fy * q.y() * iz + K.cy);
  return true;
}

PointJacobian reproject_point(const Vec2& pixel, double inv_depth, const RelativePose& rel,
                              const Intrinsics& K) {
  const Mat3& R = rel.rotation;
  const Vec3& t = rel.translation;

  const Vec3 b((pixel.x() - K.cx) / K.fx, (pixel.y() - K.cy) / K.fy, 1.0);
  const Vec3 q = R * b + t * inv_depth;

  PointJacobian out;
  if (!(inv_depth > 0.0) || q.z() / inv_depth <= kMinDepth) {
    out.valid = false;
    return out;
  }

  const double iz = 1.0 / q.z();
  out.coord = Vec2(K.fx * q.x() * iz + K.cx, K.fy * q.y() * iz + K.cy);

  Eigen::Matrix<double, 2, 3> d_proj;
  d_proj << K.fx * iz, 0.0, -K.fx * q.x() * iz * iz,
            0.0, K.fy * iz, -K.fy * q.y() * iz * iz;

  // Source perturbation: q <- R (b + w x b + v d) + t d.
  Eigen::Matrix<double, 3, 6> dq_source;
  dq_source.leftCols<3>() = inv_depth * R;
  dq_source.rightCols<3>() = -R * hat(b);
  // Target perturbation: Q <- exp(-xi) Q.
  Eigen::Matrix<double, 3, 6> dq_target;
  dq_target.leftCols<3>() = -inv_depth * Mat3::Identity();
  dq_target.rightCols<3>() = hat(q);

  out.d_source = d_proj * dq_source;
  out.d_target = d_proj * dq_target;
  out.d_inv_depth = d_proj * t;
  return out;
}

Reprojection reproject_patch(const Patch& patch, const Pose& source, const Pose& target,
                             const Intrinsics& K) {
  return reproject_patch(patch, relative_pose(source, target), K);
}

Reprojection reproject_patch(const Patch& patch, const RelativePose& rel, const Intrinsics& K) {
  const double d = patch.inv_depth;
  const int r = patch.radius;
  Reprojection out;
  out.coords.reserve(static_cast<std::size_t>(patch.pixel_count()));
  out.valid = d > 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      Vec2 coord(0.0, 0.0);
      if (out.valid &&
          !project_point(patch.center + Vec2(dx, dy), d, rel, K, coord)) {
        out.valid = false;
      }
      out.coords.push_back(out.valid ? coord : Vec2(0.0, 0.0));
    }
  }
  return out;
}

PatchJacobian reprojection_jacobian(const Patch& patch, const Pose& source, const Pose& target,
                                    const Intrinsics& K) {
  PatchJacobian out;
  for (const Vec2& px : patch.pixels()) {
    out.points.push_back(reproject_point(px, patch.inv_depth, source, target, K));
    out.valid = out.valid && out.points.back().valid;
  }
  return out;
}

}  // namespace svo
