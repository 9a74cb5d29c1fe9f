#pragma once

#include <vector>

#include "oracles.hpp"
#include "svo/bundle_adjust.hpp"

// Small synthetic BA scene: frames on a short arc looking down +z, patches
// with known inverse depth, every patch observed from every other frame.
struct BAScene {
  svo::BAProblem problem;          // perturbed start
  std::vector<svo::Pose> truth;    // ground-truth poses
  std::vector<double> truth_depth; // ground-truth inverse depths
};

inline BAScene make_ba_scene(std::uint64_t seed, int frames = 4, int patches = 12,
                             double pose_noise = 0.02, double depth_noise = 0.05) {
  using namespace svo;
  Rng rng(seed);
  BAScene s;
  BAProblem& p = s.problem;
  p.intrinsics = {200.0, 200.0, 80.0, 60.0};
  for (int f = 0; f < frames; ++f) {
    const Twist xi = (Twist() << 0.15 * f + rng.uniform(-0.02, 0.02), rng.uniform(-0.05, 0.05),
                      0.05 * f + rng.uniform(-0.02, 0.02), rng.uniform(-0.03, 0.03),
                      rng.uniform(-0.05, 0.05), rng.uniform(-0.03, 0.03))
                         .finished();
    s.truth.push_back(f == 0 ? Pose() : se3_exp(xi));
  }
  for (int k = 0; k < patches; ++k) {
    Patch patch;
    patch.frame_id = k % frames;
    patch.center = Vec2(rng.uniform(30, 130), rng.uniform(25, 95));
    patch.inv_depth = rng.uniform(0.2, 0.5);
    s.truth_depth.push_back(patch.inv_depth);
    p.patches.push_back(patch);
  }
  for (int k = 0; k < patches; ++k) {
    const int src = p.patches[k].frame_id;
    for (int t = 0; t < frames; ++t) {
      if (t == src) continue;
      BAEdge e;
      e.source = src;
      e.target = t;
      e.patch = k;
      const Patch& patch = p.patches[k];
      e.target_position = oracle::project_through_world(patch.center, patch.inv_depth, s.truth[src], s.truth[t],
                                                        p.intrinsics);
      for (const Vec2& px : patch.pixels()) {
        e.pixel_targets.push_back(
            oracle::project_through_world(px, patch.inv_depth, s.truth[src], s.truth[t], p.intrinsics));
      }
      p.edges.push_back(e);
    }
  }
  // Frame 0 anchors the pose, frame 1's distance to it fixes the scale.
  p.modes.assign(frames, PoseMode::kFree);
  p.modes[0] = PoseMode::kFixed;
  p.modes[1] = PoseMode::kFixedNorm;
  p.poses = s.truth;
  for (int f = 1; f < frames; ++f) {
    Twist d = oracle::random_twist(rng, 1, 1);
    d *= pose_noise / d.norm();
    p.poses[f] = s.truth[f] * se3_exp(d);
  }
  const Vec3 t1 = p.poses[1].translation();
  p.poses[1] = Pose(p.poses[1].rotation(), t1 * (s.truth[1].translation().norm() / t1.norm()));
  for (int k = 0; k < patches; ++k) {
    p.patches[k].inv_depth *= 1.0 + (rng.uniform() < 0.5 ? -depth_noise : depth_noise);
  }
  return s;
}

// Random SPD system in pose/depth block form, plus its dense assembly.
struct Blocks {
  Eigen::MatrixXd h_pose, coupling;
  Eigen::VectorXd h_depth, b_pose, b_depth;
  Eigen::MatrixXd dense;
  Eigen::VectorXd b;
};

inline Blocks random_spd(svo::Rng& rng, int np, int nd, bool coupled = true) {
  Blocks k;
  Eigen::MatrixXd a(np, np);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < np; ++j) a(i, j) = rng.uniform(-1, 1);
  k.coupling = Eigen::MatrixXd::Zero(np, nd);
  if (coupled)
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < nd; ++j) k.coupling(i, j) = rng.uniform(-1, 1);
  k.h_depth.resize(nd);
  for (int j = 0; j < nd; ++j) k.h_depth[j] = rng.uniform(0.5, 3.0);
  k.h_pose = a * a.transpose() + k.coupling * k.h_depth.cwiseInverse().asDiagonal() * k.coupling.transpose() +
             0.5 * Eigen::MatrixXd::Identity(np, np);
  k.dense = Eigen::MatrixXd::Zero(np + nd, np + nd);
  k.dense.topLeftCorner(np, np) = k.h_pose;
  k.dense.topRightCorner(np, nd) = k.coupling;
  k.dense.bottomLeftCorner(nd, np) = k.coupling.transpose();
  k.dense.bottomRightCorner(nd, nd) = k.h_depth.asDiagonal();
  k.b.resize(np + nd);
  for (int i = 0; i < np + nd; ++i) k.b[i] = rng.uniform(-2, 2);
  k.b_pose = k.b.head(np);
  k.b_depth = k.b.tail(nd);
  return k;
}

inline Eigen::VectorXd joined(const svo::SchurResult& r) {
  Eigen::VectorXd x(r.pose_delta.size() + r.depth_delta.size());
  x << r.pose_delta, r.depth_delta;
  return x;
}

inline double pose_error(const std::vector<svo::Pose>& a, const std::vector<svo::Pose>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, svo::se3_log(a[i].inverse() * b[i]).norm());
  return worst;
}

inline double depth_error(const std::vector<double>& est, const std::vector<double>& truth) {
  double worst = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) worst = std::max(worst, std::abs(est[i] - truth[i]) / truth[i]);
  return worst;
}
