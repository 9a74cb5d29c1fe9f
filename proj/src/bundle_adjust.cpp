#include "svo/bundle_adjust.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "svo/error.hpp"

namespace svo {

namespace {

constexpr double kDepthFloor = 1e-8;
constexpr double kRankTolerance = 1e-12;

void validate(const BAProblem& problem) {
  const int n_poses = static_cast<int>(problem.poses.size());
  const int n_patches = static_cast<int>(problem.patches.size());
  if (problem.modes.size() != problem.poses.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one pose mode per pose required");
  }
  if (std::none_of(problem.modes.begin(), problem.modes.end(),
                   [](PoseMode m) { return m == PoseMode::kFixed; })) {
    throw Error(ErrorCode::kInvalidArgument, "at least one pose must be fixed");
  }
  problem.intrinsics.validate();
  for (const Patch& p : problem.patches) {
    if (p.frame_id < 0 || p.frame_id >= n_poses) {
      throw Error(ErrorCode::kInvalidArgument, "patch frame index out of range");
    }
  }
  for (const BAEdge& e : problem.edges) {
    if (e.source < 0 || e.target < 0 || e.source >= n_poses || e.target >= n_poses ||
        e.patch < 0 || e.patch >= n_patches) {
      throw Error(ErrorCode::kInvalidArgument, "edge index out of range");
    }
    if (e.source == e.target) throw Error(ErrorCode::kInvalidArgument, "edge source == target");
    if (problem.patches[e.patch].frame_id != e.source) {
      throw Error(ErrorCode::kInvalidArgument, "edge source differs from its patch's frame");
    }
    if (!(e.weight.x() > 0.0) || !(e.weight.y() > 0.0) || !e.weight.allFinite()) {
      throw Error(ErrorCode::kNonPositiveWeight, "edge weights must be positive and finite");
    }
  }
}

// Residual sample points of one edge: the patch centre, or every pixel.
template <typename Fn>
void for_each_residual(const BAProblem& problem, const BAEdge& edge, bool full_patch, Fn&& fn) {
  const Patch& patch = problem.patches[edge.patch];
  if (full_patch && static_cast<int>(edge.pixel_targets.size()) == patch.pixel_count()) {
    const std::vector<Vec2> pixels = patch.pixels();
    for (std::size_t i = 0; i < pixels.size(); ++i) fn(pixels[i], edge.pixel_targets[i]);
  } else {
    fn(patch.center, edge.target_position);
  }
}

struct CostEval {
  double cost = 0.0;
  int valid = 0;
};

// Relative transforms for every ordered pose pair that carries an edge.
class RelativeTable {
 public:
  RelativeTable(const BAProblem& problem, const std::vector<Pose>& poses)
      : n_(static_cast<int>(poses.size())), table_(poses.size() * poses.size()),
        filled_(poses.size() * poses.size(), 0) {
    for (const BAEdge& e : problem.edges) {
      const std::size_t k = static_cast<std::size_t>(e.source) * n_ + e.target;
      if (!filled_[k]) {
        table_[k] = relative_pose(poses[e.source], poses[e.target]);
        filled_[k] = 1;
      }
    }
  }
  const RelativePose& operator()(int source, int target) const {
    return table_[static_cast<std::size_t>(source) * n_ + target];
  }

 private:
  int n_;
  std::vector<RelativePose> table_;
  std::vector<char> filled_;
};

CostEval evaluate(const BAProblem& problem, const std::vector<Pose>& poses,
                  const std::vector<double>& depths, bool full_patch) {
  const RelativeTable rel(problem, poses);
  CostEval out;
  for (const BAEdge& e : problem.edges) {
    if (!e.valid) continue;
    double edge_cost = 0.0;
    bool ok = true;
    const RelativePose& r_st = rel(e.source, e.target);
    for_each_residual(problem, e, full_patch, [&](const Vec2& pixel, const Vec2& target) {
      Vec2 coord;
      if (!ok || !project_point(pixel, depths[e.patch], r_st, problem.intrinsics, coord)) {
        ok = false;
        return;
      }
      const Vec2 r = target - coord;
      edge_cost += e.weight.x() * r.x() * r.x() + e.weight.y() * r.y() * r.y();
    });
    if (!ok) continue;
    out.cost += edge_cost;
    ++out.valid;
  }
  return out;
}

// Orthonormal 6 x 5 basis of twists that keep |t - t_anchor| fixed to first order.
Eigen::Matrix<double, 6, 5> norm_preserving_basis(const Pose& pose, const Vec3& anchor) {
  const Vec3 u = (pose.rotation().conjugate() * (pose.translation() - anchor)).normalized();
  const Vec3 helper = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 n1 = u.cross(helper).normalized();
  const Vec3 n2 = u.cross(n1);
  Eigen::Matrix<double, 6, 5> b = Eigen::Matrix<double, 6, 5>::Zero();
  b.block<3, 1>(0, 0) = n1;
  b.block<3, 1>(0, 1) = n2;
  b.block<3, 3>(3, 2) = Mat3::Identity();
  return b;
}

}  // namespace

double ba_cost(const BAProblem& problem, const std::vector<Pose>& poses,
               const std::vector<double>& inv_depths, bool full_patch_residuals) {
  return evaluate(problem, poses, inv_depths, full_patch_residuals).cost;
}

SchurResult schur_solve(const Eigen::MatrixXd& h_pose, const Eigen::VectorXd& h_depth,
                        const Eigen::MatrixXd& h_coupling, const Eigen::VectorXd& b_pose,
                        const Eigen::VectorXd& b_depth, int gauge_dof, double pose_damping) {
  const Eigen::Index n = h_pose.rows();
  const Eigen::Index m = h_depth.size();
  if (h_pose.cols() != n || b_pose.size() != n || b_depth.size() != m ||
      h_coupling.rows() != n || h_coupling.cols() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "Schur system blocks disagree in size");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(h_depth(i) >= kDepthFloor)) {
      throw Error(ErrorCode::kSingularSystem, "depth block below damping floor");
    }
  }

  const Eigen::VectorXd inv_d = h_depth.cwiseInverse();
  SchurResult out;
  out.pose_delta = Eigen::VectorXd::Zero(n);
  if (n > 0) {
    Eigen::MatrixXd reduced = h_pose;
    if (m > 0) {
      const Eigen::MatrixXd scaled = h_coupling * inv_d.cwiseSqrt().asDiagonal();
      reduced.selfadjointView<Eigen::Lower>().rankUpdate(scaled, -1.0);
    }
    reduced = reduced.selfadjointView<Eigen::Lower>();
    const Eigen::VectorXd rhs = b_pose - h_coupling * inv_d.cwiseProduct(b_depth);

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced);
    if (eig.info() != Eigen::Success) {
      throw Error(ErrorCode::kSingularSystem, "eigen decomposition of the reduced system failed");
    }
    const Eigen::VectorXd damped = eig.eigenvalues();
    const Eigen::VectorXd undamped = damped.array() - pose_damping;
    const double top = undamped.maxCoeff();
    const double threshold = kRankTolerance * std::max(top, 0.0);
    int dropped = 0;
    double smallest = std::numeric_limits<double>::infinity();
    Eigen::VectorXd coeffs = eig.eigenvectors().transpose() * rhs;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(top > 0.0) || undamped(i) <= threshold) {
        ++dropped;
        coeffs(i) = 0.0;
      } else {
        smallest = std::min(smallest, undamped(i));
        coeffs(i) /= damped(i);
      }
    }
    if (dropped > gauge_dof) {
      throw Error(ErrorCode::kSingularSystem,
                  "reduced pose system has " + std::to_string(dropped) + " null directions, " +
                      std::to_string(gauge_dof) + " allowed by the gauge");
    }
    out.gauge_dropped = dropped;
    out.condition = std::isfinite(smallest) ? top / smallest : 1.0;
    out.pose_delta = eig.eigenvectors() * coeffs;
  }
  out.depth_delta = inv_d.cwiseProduct(b_depth - h_coupling.transpose() * out.pose_delta);
  return out;
}

BASolution weighted_ba(const BAProblem& problem, const BAOptions& options) {
  validate(problem);
  const int n_poses = static_cast<int>(problem.poses.size());
  const int n_patches = static_cast<int>(problem.patches.size());
  const bool full_patch = options.full_patch_residuals;

  int anchor = -1;
  int fixed_count = 0;
  bool has_norm = false;
  for (int p = 0; p < n_poses; ++p) {
    if (problem.modes[p] == PoseMode::kFixed) {
      if (anchor < 0) anchor = p;
      ++fixed_count;
    }
    has_norm = has_norm || problem.modes[p] == PoseMode::kFixedNorm;
  }
  const Vec3 anchor_t = problem.poses[anchor].translation();
  const int gauge_dof = (fixed_count == 1 && !has_norm) ? 1 : 0;

  // Optimisation layout: full (6 per pose) for accumulation, reduced after the
  // norm constraint.
  std::vector<int> full_off(n_poses, -1);
  std::vector<int> red_off(n_poses, -1);
  std::vector<int> red_dim(n_poses, 0);
  std::vector<double> norms(n_poses, 0.0);
  int full_dim = 0;
  int reduced_dim = 0;
  for (int p = 0; p < n_poses; ++p) {
    if (problem.modes[p] == PoseMode::kFixed) continue;
    full_off[p] = full_dim;
    full_dim += 6;
    red_off[p] = reduced_dim;
    red_dim[p] = problem.modes[p] == PoseMode::kFixedNorm ? 5 : 6;
    reduced_dim += red_dim[p];
    if (problem.modes[p] == PoseMode::kFixedNorm) {
      norms[p] = (problem.poses[p].translation() - anchor_t).norm();
      if (norms[p] < 1e-12) {
        throw Error(ErrorCode::kInvalidArgument, "norm-constrained pose coincides with the anchor");
      }
    }
  }

  BASolution sol;
  sol.poses = problem.poses;
  sol.inv_depths.resize(n_patches);
  for (int k = 0; k < n_patches; ++k) sol.inv_depths[k] = problem.patches[k].inv_depth;

  CostEval current = evaluate(problem, sol.poses, sol.inv_depths, full_patch);
  if (current.valid == 0) throw Error(ErrorCode::kNoValidEdges, "no valid edge to optimise");
  sol.cost_history.push_back(current.cost);

  double lambda = options.damping;
  for (int iter = 0; iter < options.iterations; ++iter) {
    Eigen::MatrixXd h_full = Eigen::MatrixXd::Zero(full_dim, full_dim);
    Eigen::MatrixXd c_full = Eigen::MatrixXd::Zero(full_dim, n_patches);
    Eigen::VectorXd b_full = Eigen::VectorXd::Zero(full_dim);
    Eigen::VectorXd h_depth = Eigen::VectorXd::Zero(n_patches);
    Eigen::VectorXd b_depth = Eigen::VectorXd::Zero(n_patches);

    const RelativeTable rel(problem, sol.poses);
    for (const BAEdge& e : problem.edges) {
      if (!e.valid) continue;
      const int oi = full_off[e.source];
      const int oj = full_off[e.target];
      const RelativePose& r_st = rel(e.source, e.target);
      for_each_residual(problem, e, full_patch, [&](const Vec2& pixel, const Vec2& target) {
        const PointJacobian pj =
            reproject_point(pixel, sol.inv_depths[e.patch], r_st, problem.intrinsics);
        if (!pj.valid) return;
        const Vec2 r = target - pj.coord;
        const Vec2 wjd = e.weight.cwiseProduct(pj.d_inv_depth);
        for (int row = 0; row < 2; ++row) {
          const double wr = e.weight(row);
          const Vec6 a = pj.d_source.row(row).transpose();
          const Vec6 b = pj.d_target.row(row).transpose();
          const Vec6 wa = wr * a;
          const Vec6 wb = wr * b;
          const double jd = pj.d_inv_depth(row);
          if (oi >= 0) {
            h_full.block<6, 6>(oi, oi).noalias() += wa * a.transpose();
            b_full.segment<6>(oi).noalias() += wa * r(row);
            c_full.block<6, 1>(oi, e.patch).noalias() += wa * jd;
          }
          if (oj >= 0) {
            h_full.block<6, 6>(oj, oj).noalias() += wb * b.transpose();
            b_full.segment<6>(oj).noalias() += wb * r(row);
            c_full.block<6, 1>(oj, e.patch).noalias() += wb * jd;
          }
          if (oi >= 0 && oj >= 0) {
            // Lower triangle only; mirrored after accumulation.
            if (oi > oj) {
              h_full.block<6, 6>(oi, oj).noalias() += wa * b.transpose();
            } else {
              h_full.block<6, 6>(oj, oi).noalias() += wb * a.transpose();
            }
          }
        }
        h_depth(e.patch) += pj.d_inv_depth.dot(wjd);
        b_depth(e.patch) += wjd.dot(r);
      });
    }

    h_full.triangularView<Eigen::StrictlyUpper>() = h_full.transpose();

    // Project norm-constrained poses onto their 5-dimensional tangent basis.
    std::vector<Eigen::MatrixXd> basis(n_poses);
    for (int p = 0; p < n_poses; ++p) {
      if (red_off[p] < 0) continue;
      basis[p] = problem.modes[p] == PoseMode::kFixedNorm
                     ? Eigen::MatrixXd(norm_preserving_basis(sol.poses[p], anchor_t))
                     : Eigen::MatrixXd::Identity(6, 6);
    }
    Eigen::MatrixXd h_pose(reduced_dim, reduced_dim);
    Eigen::MatrixXd coupling(reduced_dim, n_patches);
    Eigen::VectorXd b_pose(reduced_dim);
    for (int p = 0; p < n_poses; ++p) {
      if (red_off[p] < 0) continue;
      const bool plain_p = red_dim[p] == 6;
      const auto rows_c = c_full.middleRows(full_off[p], 6);
      if (plain_p) {
        coupling.middleRows(red_off[p], 6) = rows_c;
        b_pose.segment(red_off[p], 6) = b_full.segment(full_off[p], 6);
      } else {
        coupling.middleRows(red_off[p], red_dim[p]).noalias() = basis[p].transpose() * rows_c;
        b_pose.segment(red_off[p], red_dim[p]).noalias() =
            basis[p].transpose() * b_full.segment(full_off[p], 6);
      }
      for (int q = 0; q < n_poses; ++q) {
        if (red_off[q] < 0) continue;
        const auto block = h_full.block(full_off[p], full_off[q], 6, 6);
        auto dst = h_pose.block(red_off[p], red_off[q], red_dim[p], red_dim[q]);
        if (plain_p && red_dim[q] == 6) {
          dst = block;
        } else {
          dst.noalias() = basis[p].transpose() * block * basis[q];
        }
      }
    }

    bool accepted = false;
    std::vector<Pose> candidate_poses;
    std::vector<double> candidate_depths;
    CostEval candidate;
    double step_norm = 0.0;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Eigen::MatrixXd h_damped = h_pose;
      h_damped.diagonal().array() += lambda;
      const Eigen::VectorXd d_damped = h_depth.array() + lambda;
      const SchurResult step = schur_solve(h_damped, d_damped, coupling, b_pose, b_depth,
                                           gauge_dof, lambda);

      candidate_poses = sol.poses;
      for (int p = 0; p < n_poses; ++p) {
        if (red_off[p] < 0) continue;
        const Twist xi = basis[p] * step.pose_delta.segment(red_off[p], red_dim[p]);
        Pose updated = sol.poses[p] * se3_exp(xi);
        if (problem.modes[p] == PoseMode::kFixedNorm) {
          const Vec3 rel = updated.translation() - anchor_t;
          updated = Pose(updated.rotation(), anchor_t + rel * (norms[p] / rel.norm()));
        }
        candidate_poses[p] = updated;
      }
      candidate_depths = sol.inv_depths;
      for (int k = 0; k < n_patches; ++k) {
        candidate_depths[k] =
            std::clamp(candidate_depths[k] + step.depth_delta(k), kMinInvDepth, kMaxInvDepth);
      }
      step_norm = std::max(step.pose_delta.size() > 0 ? step.pose_delta.lpNorm<Eigen::Infinity>() : 0.0,
                           step.depth_delta.size() > 0 ? step.depth_delta.lpNorm<Eigen::Infinity>() : 0.0);

      candidate = evaluate(problem, candidate_poses, candidate_depths, full_patch);
      if (candidate.valid >= current.valid && candidate.cost <= current.cost) {
        accepted = true;
      } else {
        lambda *= 10.0;
      }
    }

    if (accepted) {
      const double previous = current.cost;
      sol.poses = std::move(candidate_poses);
      sol.inv_depths = std::move(candidate_depths);
      current = candidate;
      lambda = std::max(lambda / 10.0, options.damping);
      sol.converged = step_norm < 1e-12 || previous - current.cost <= 1e-14 * previous;
    }
    sol.cost_history.push_back(current.cost);
    if (accepted && step_norm < 1e-14) break;
  }
  sol.cost = current.cost;
  sol.valid_edges = current.valid;
  return sol;
}

}  // namespace svo
