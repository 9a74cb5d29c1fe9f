#pragma once

#include <vector>

#include <Eigen/Core>

#include "svo/geometry.hpp"

namespace svo {

// How a pose participates in the optimisation.
//  kFixed      held constant (gauge anchor);
//  kFixedNorm  free except for the distance to the first kFixed pose, which
//              removes the monocular scale freedom.
enum class PoseMode { kFree, kFixed, kFixedNorm };

struct BAEdge {
  int source = 0;  // pose index; must equal patches[patch].frame_id
  int target = 0;  // pose index
  int patch = 0;
  Vec2 target_position = Vec2::Zero();  // estimated position of the patch centre
  Vec2 weight = Vec2::Ones();           // diagonal confidence
  bool valid = true;
  // Per-pixel targets, used only with BAOptions::full_patch_residuals.
  std::vector<Vec2> pixel_targets;
};

struct BAProblem {
  std::vector<Pose> poses;
  std::vector<PoseMode> modes;  // one per pose
  std::vector<Patch> patches;
  std::vector<BAEdge> edges;
  Intrinsics intrinsics;
};

inline constexpr double kMinInvDepth = 1e-4;
inline constexpr double kMaxInvDepth = 1e2;

struct BAOptions {
  int iterations = 2;
  double damping = 1e-4;
  bool full_patch_residuals = false;
};

struct BASolution {
  std::vector<Pose> poses;
  std::vector<double> inv_depths;
  double cost = 0.0;
  std::vector<double> cost_history;  // initial cost, then one entry per iteration
  bool converged = false;
  int valid_edges = 0;
};

// Weighted reprojection cost sum_e r_e^T diag(w_e) r_e with r_e = target - reproject(centre).
double ba_cost(const BAProblem& problem, const std::vector<Pose>& poses,
               const std::vector<double>& inv_depths, bool full_patch_residuals = false);

// Damped Gauss-Newton over poses (right-multiplied twists) and inverse depths.
// A step that raises the cost is retried once with ten times the damping and
// then rejected. Throws Error(kNoValidEdges), Error(kSingularSystem), or
// Error(kInvalidArgument) when the problem violates its invariants.
BASolution weighted_ba(const BAProblem& problem, const BAOptions& options = {});

struct SchurResult {
  Eigen::VectorXd pose_delta;
  Eigen::VectorXd depth_delta;
  double condition = 1.0;  // of the reduced system after removing gauge directions
  int gauge_dropped = 0;
};

// Solves [H_pose C; C^T diag(H_depth)] [dp; dd] = [b_pose; b_depth] by
// eliminating the scalar depth blocks. `pose_damping` is the part of H_pose's
// diagonal that is damping; the rank test ignores it. Up to `gauge_dof`
// null directions of the reduced system are projected out; more, or a
// condition estimate above 1e12, throws Error(kSingularSystem).
SchurResult schur_solve(const Eigen::MatrixXd& h_pose, const Eigen::VectorXd& h_depth,
                        const Eigen::MatrixXd& h_coupling, const Eigen::VectorXd& b_pose,
                        const Eigen::VectorXd& b_depth, int gauge_dof = 0,
                        double pose_damping = 0.0);

}  // namespace svo
