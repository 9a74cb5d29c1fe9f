#pragma once

#include <vector>

#include "svo/geometry.hpp"

namespace svo {

struct StampedPose {
  double stamp = 0.0;
  Pose pose;
};

// Timestamped poses with strictly increasing stamps.
class Trajectory {
 public:
  // Throws Error(kNonMonotoneTimestamps) unless stamp exceeds the last one.
  void push_back(double stamp, const Pose& pose);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const StampedPose& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<StampedPose>& entries() const { return entries_; }

  std::vector<Pose> poses() const;
  std::vector<Vec3> positions() const;

 private:
  std::vector<StampedPose> entries_;
};

struct Sim3Alignment {
  double scale = 1.0;
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
};

// Least-squares (s, R, t) minimising sum |gt - (s R est + t)|^2 with det R = +1.
// Scale is fixed to 1 when with_scale is false. Throws Error(kDegenerateGeometry)
// for fewer than 3 points or a covariance of rank < 2, Error(kDimensionMismatch)
// for lists of different length.
Sim3Alignment umeyama_align(const std::vector<Vec3>& est, const std::vector<Vec3>& gt,
                            bool with_scale = true);

enum class AlignMode { kSim3, kSe3, kNone };

// Pairs est and gt entries by nearest stamp within max_dt (one gt per est).
std::vector<std::pair<std::size_t, std::size_t>> associate(const Trajectory& est,
                                                           const Trajectory& gt,
                                                           double max_dt = 0.02);

// Translational RMSE after alignment. Throws Error(kInsufficientMatches) with
// fewer than 3 associated pairs.
double ate_rmse(const Trajectory& est, const Trajectory& gt, AlignMode align = AlignMode::kSim3);

}  // namespace svo
