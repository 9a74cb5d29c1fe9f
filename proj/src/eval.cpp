#include "svo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "svo/error.hpp"

namespace svo {

void Trajectory::push_back(double stamp, const Pose& pose) {
  if (!std::isfinite(stamp)) throw Error(ErrorCode::kInvalidArgument, "non-finite timestamp");
  if (!entries_.empty() && !(stamp > entries_.back().stamp)) {
    throw Error(ErrorCode::kNonMonotoneTimestamps,
                "timestamp " + std::to_string(stamp) + " does not exceed " +
                    std::to_string(entries_.back().stamp));
  }
  entries_.push_back({stamp, pose});
}

std::vector<Pose> Trajectory::poses() const {
  std::vector<Pose> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.pose);
  return out;
}

std::vector<Vec3> Trajectory::positions() const {
  std::vector<Vec3> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.pose.translation());
  return out;
}

Sim3Alignment umeyama_align(const std::vector<Vec3>& est, const std::vector<Vec3>& gt,
                            bool with_scale) {
  if (est.size() != gt.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "point lists differ in length");
  }
  const std::size_t n = est.size();
  if (n < 3) throw Error(ErrorCode::kDegenerateGeometry, "need at least 3 points");

  Vec3 mu_e = Vec3::Zero();
  Vec3 mu_g = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_e += est[i];
    mu_g += gt[i];
  }
  mu_e /= static_cast<double>(n);
  mu_g /= static_cast<double>(n);

  Mat3 cov = Mat3::Zero();
  double var_e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 de = est[i] - mu_e;
    cov += (gt[i] - mu_g) * de.transpose();
    var_e += de.squaredNorm();
  }
  cov /= static_cast<double>(n);
  var_e /= static_cast<double>(n);

  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) {
    throw Error(ErrorCode::kDegenerateGeometry, "points are coincident or collinear");
  }
  Mat3 sign = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) sign(2, 2) = -1.0;
  const Mat3 r = svd.matrixU() * sign * svd.matrixV().transpose();

  Sim3Alignment out;
  out.rotation = Eigen::Quaterniond(r).normalized();
  out.scale = with_scale ? (sv.asDiagonal() * sign).trace() / var_e : 1.0;
  out.translation = mu_g - out.scale * (r * mu_e);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> associate(const Trajectory& est,
                                                           const Trajectory& gt, double max_dt) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const auto& g = gt.entries();
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double t = est[i].stamp;
    auto it = std::lower_bound(g.begin(), g.end(), t,
                               [](const StampedPose& p, double s) { return p.stamp < s; });
    std::size_t best = g.size();
    double best_dt = max_dt;
    // Earlier neighbour first so that ties resolve to it.
    if (it != g.begin() && std::abs(std::prev(it)->stamp - t) <= best_dt) {
      best = static_cast<std::size_t>(std::prev(it) - g.begin());
      best_dt = std::abs(std::prev(it)->stamp - t);
    }
    if (it != g.end() && (std::abs(it->stamp - t) < best_dt ||
                          (best == g.size() && std::abs(it->stamp - t) <= best_dt))) {
      best = static_cast<std::size_t>(it - g.begin());
    }
    if (best < g.size()) out.emplace_back(i, best);
  }
  return out;
}

double ate_rmse(const Trajectory& est, const Trajectory& gt, AlignMode align) {
  const auto pairs = associate(est, gt);
  if (pairs.size() < 3) {
    throw Error(ErrorCode::kInsufficientMatches,
                std::to_string(pairs.size()) + " timestamp matches, at least 3 required");
  }
  std::vector<Vec3> pe;
  std::vector<Vec3> pg;
  for (const auto& [i, j] : pairs) {
    pe.push_back(est[i].pose.translation());
    pg.push_back(gt[j].pose.translation());
  }
  Sim3Alignment a;
  if (align != AlignMode::kNone) a = umeyama_align(pe, pg, align == AlignMode::kSim3);
  double sum = 0.0;
  for (std::size_t k = 0; k < pe.size(); ++k) sum += (pg[k] - a.apply(pe[k])).squaredNorm();
  return std::sqrt(sum / static_cast<double>(pe.size()));
}

}  // namespace svo
