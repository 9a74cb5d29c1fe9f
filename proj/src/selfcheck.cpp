#include "svo/selfcheck.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include <Eigen/Dense>

#include "svo/bundle_adjust.hpp"
#include "svo/error.hpp"
#include "svo/eval.hpp"
#include "svo/homography.hpp"
#include "svo/io.hpp"
#include "svo/losses.hpp"
#include "svo/random.hpp"
#include "svo/saliency.hpp"

namespace svo {

namespace {

Twist random_twist(Rng& rng, double t_scale, double w_scale) {
  Twist xi;
  for (int i = 0; i < 3; ++i) xi[i] = rng.uniform(-t_scale, t_scale);
  for (int i = 3; i < 6; ++i) xi[i] = rng.uniform(-w_scale, w_scale);
  return xi;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

// Returns the worst error; passes when it is below `tol`.
CheckResult bounded(const std::string& name, double tol, const std::function<double()>& fn) {
  CheckResult r{name, false, ""};
  try {
    const double err = fn();
    r.passed = std::isfinite(err) && err < tol;
    r.detail = "max error " + num(err) + " (tolerance " + num(tol) + ")";
  } catch (const std::exception& e) {
    r.detail = std::string("threw ") + e.what();
  }
  return r;
}

double exp_log_roundtrip() {
  Rng rng(1);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Pose p = se3_exp(random_twist(rng, 2.0, 1.0));
    const Pose q = se3_exp(se3_log(p));
    worst = std::max(worst, (p.matrix() - q.matrix()).cwiseAbs().maxCoeff());
    worst = std::max(worst, std::abs(p.rotation().norm() - 1.0));
  }
  return worst;
}

double jacobian_vs_differences() {
  Rng rng(2);
  const Intrinsics k{300.0, 310.0, 160.0, 120.0};
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Pose src = se3_exp(random_twist(rng, 0.5, 0.2));
    const Pose tgt = src * se3_exp(random_twist(rng, 0.2, 0.1));
    const Vec2 px(rng.uniform(40, 280), rng.uniform(40, 200));
    const double d = rng.uniform(0.2, 1.0);
    const PointJacobian j = reproject_point(px, d, src, tgt, k);
    if (!j.valid) continue;
    const double h = 1e-6;
    auto rel = [&](const Vec2& a, const Vec2& fd) {
      return (a - fd).norm() / std::max(1.0, fd.norm());
    };
    for (int c = 0; c < 6; ++c) {
      Twist e = Twist::Zero();
      e[c] = h;
      const Vec2 fs = (reproject_point(px, d, src * se3_exp(e), tgt, k).coord -
                       reproject_point(px, d, src * se3_exp(-e), tgt, k).coord) / (2 * h);
      const Vec2 ft = (reproject_point(px, d, src, tgt * se3_exp(e), k).coord -
                       reproject_point(px, d, src, tgt * se3_exp(-e), k).coord) / (2 * h);
      worst = std::max({worst, rel(j.d_source.col(c), fs), rel(j.d_target.col(c), ft)});
    }
    const Vec2 fd = (reproject_point(px, d + h, src, tgt, k).coord -
                     reproject_point(px, d - h, src, tgt, k).coord) / (2 * h);
    worst = std::max(worst, rel(j.d_inv_depth, fd));
  }
  return worst;
}

double schur_vs_dense() {
  Rng rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int np = 12, nd = 20, n = np + nd;
    Eigen::MatrixXd b_mat(np, np), c(np, nd);
    Eigen::VectorXd d(nd);
    for (int r = 0; r < np; ++r)
      for (int k = 0; k < np; ++k) b_mat(r, k) = rng.uniform(-1, 1);
    for (int r = 0; r < np; ++r)
      for (int k = 0; k < nd; ++k) c(r, k) = rng.uniform(-1, 1);
    for (int k = 0; k < nd; ++k) d[k] = rng.uniform(0.5, 2.0);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    h.topLeftCorner(np, np) = b_mat * b_mat.transpose() + c * d.cwiseInverse().asDiagonal() * c.transpose() +
                              Eigen::MatrixXd::Identity(np, np);
    h.topRightCorner(np, nd) = c;
    h.bottomLeftCorner(nd, np) = c.transpose();
    h.bottomRightCorner(nd, nd) = d.asDiagonal();
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b[i] = rng.uniform(-1, 1);
    const Eigen::VectorXd dense = h.ldlt().solve(b);
    const SchurResult s = schur_solve(h.topLeftCorner(np, np), h.bottomRightCorner(nd, nd).diagonal(),
                                      h.topRightCorner(np, nd), b.head(np), b.tail(nd));
    Eigen::VectorXd joined(n);
    joined << s.pose_delta, s.depth_delta;
    worst = std::max(worst, (joined - dense).norm() / dense.norm());
  }
  return worst;
}

double ba_recovers_truth() {
  Rng rng(4);
  BAProblem p;
  p.intrinsics = {200.0, 200.0, 80.0, 60.0};
  std::vector<Pose> truth;
  for (int f = 0; f < 4; ++f) {
    truth.push_back(se3_exp((Twist() << 0.1 * f, 0.02 * f, 0.05 * f, 0.01 * f, 0.02 * f, 0).finished()));
  }
  std::vector<double> depth;
  for (int f = 0; f < 4; ++f) {
    for (int i = 0; i < 8; ++i) {
      Patch patch;
      patch.frame_id = f;
      patch.center = Vec2(rng.uniform(20, 140), rng.uniform(15, 105));
      patch.inv_depth = rng.uniform(0.2, 0.6);
      depth.push_back(patch.inv_depth);
      p.patches.push_back(patch);
    }
  }
  for (int k = 0; k < static_cast<int>(p.patches.size()); ++k) {
    const int s = p.patches[k].frame_id;
    for (int t = 0; t < 4; ++t) {
      if (t == s) continue;
      BAEdge e;
      e.source = s;
      e.target = t;
      e.patch = k;
      e.target_position =
          reproject_point(p.patches[k].center, depth[k], truth[s], truth[t], p.intrinsics).coord;
      p.edges.push_back(e);
    }
  }
  p.modes = {PoseMode::kFixed, PoseMode::kFree, PoseMode::kFree, PoseMode::kFixedNorm};
  p.poses = truth;
  for (int f = 1; f < 4; ++f) p.poses[f] = truth[f] * se3_exp(random_twist(rng, 0.005, 0.005));
  // Keep the norm-held pose on its sphere.
  const Vec3 t3 = p.poses[3].translation();
  p.poses[3] = Pose(p.poses[3].rotation(), t3 * (truth[3].translation().norm() / t3.norm()));
  for (std::size_t k = 0; k < p.patches.size(); ++k) p.patches[k].inv_depth *= 1.03;
  BAOptions opts;
  opts.iterations = 10;
  const BASolution sol = weighted_ba(p, opts);
  double worst = 0.0;
  for (int f = 0; f < 4; ++f) {
    worst = std::max(worst, se3_log(truth[f].inverse() * sol.poses[f]).norm());
  }
  for (std::size_t k = 0; k < depth.size(); ++k) {
    worst = std::max(worst, std::abs(sol.inv_depths[k] - depth[k]) / depth[k]);
  }
  return worst;
}

double umeyama_recovery() {
  Rng rng(5);
  std::vector<Vec3> gt, est;
  const Eigen::Quaterniond q = so3_exp(Vec3(0.3, -0.7, 0.2));
  const Vec3 t(1.0, -2.0, 0.5);
  for (int i = 0; i < 50; ++i) {
    gt.emplace_back(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    est.push_back(2.0 * (q * gt.back()) + t);
  }
  const Sim3Alignment a = umeyama_align(est, gt, true);
  double worst = std::abs(a.scale - 0.5);
  for (std::size_t i = 0; i < gt.size(); ++i) worst = std::max(worst, (a.apply(est[i]) - gt[i]).norm());
  return worst;
}

double tum_roundtrip() {
  Rng rng(6);
  Trajectory t;
  for (int i = 0; i < 200; ++i) t.push_back(i * 0.05 + rng.uniform(0, 0.01), se3_exp(random_twist(rng, 5, 1)));
  const Trajectory back = parse_trajectory(format_trajectory(t));
  double worst = back.size() == t.size() ? 0.0 : 1.0;
  for (std::size_t i = 0; i < t.size() && i < back.size(); ++i) {
    worst = std::max(worst, std::abs(t[i].stamp - back[i].stamp));
    worst = std::max(worst, (t[i].pose.translation() - back[i].pose.translation()).cwiseAbs().maxCoeff());
    worst = std::max(worst, (t[i].pose.rotation().coeffs() - back[i].pose.rotation().coeffs())
                                .cwiseAbs().maxCoeff());
  }
  return worst;
}

double binary_roundtrips() {
  Rng rng(7);
  FeatureMap m(9, 11, 5);
  for (float& v : m.data()) v = static_cast<float>(rng.uniform(-10, 10));
  Image im(13, 7, 3);
  for (float& v : im.data()) v = static_cast<float>(rng.uniform_int(0, 255));
  const bool ok = decode_fmap(encode_fmap(m)) == m && decode_pnm(encode_pnm(im)) == im;
  return ok ? 0.0 : 1.0;
}

double saliency_bounds() {
  Rng rng(8);
  FeatureMap m(20, 24, 4);
  for (float& v : m.data()) v = static_cast<float>(rng.uniform());
  const ScoreMap s = salient_score_map(m);
  double worst = 0.0;
  for (double v : s.scores) worst = std::max({worst, -v, v - 1.0});
  return worst;
}

double match_distribution_sum() {
  Rng rng(9);
  FeatureMap m(15, 17, 6);
  for (float& v : m.data()) v = static_cast<float>(rng.uniform());
  const auto dist = feature_match_distribution(m, m.cell(3, 4));
  double sum = 0.0;
  for (double v : dist) sum += v;
  return std::abs(sum - 1.0);
}

double homography_correspondence() {
  Image base(64, 48);
  Rng rng(10);
  for (float& v : base.data()) v = static_cast<float>(rng.uniform(0, 255));
  SequenceConfig cfg;
  cfg.augmentation.occlusion.enabled = false;
  const HomographySequence seq = generate_sequence(base, 3, cfg, 11);
  std::vector<Vec2> pts;
  for (int i = 0; i < 100; ++i) pts.emplace_back(rng.uniform(0, 63), rng.uniform(0, 47));
  const Correspondences c = gt_correspondence(seq, pts);
  double worst = 0.0;
  for (int t = 0; t < seq.length(); ++t) {
    for (std::size_t l = 0; l < pts.size(); ++l) {
      worst = std::max(worst, (c.positions[t][l] - apply_homography(seq.homographies[t], pts[l])).norm());
    }
  }
  return worst;
}

double loss_fixed_points() {
  std::vector<Edge> edges{{0, 1, 0}, {1, 0, 2}};
  std::vector<Vec2> delta{Vec2(0.5, -1.0), Vec2(2.0, 3.0)};
  std::vector<Vec2> ones(2, Vec2::Ones());
  double worst = std::abs(flow_nll_loss(edges, delta, delta, ones));
  std::vector<Pose> g{Pose(), se3_exp((Twist() << 1, 2, 3, 0.1, 0.2, 0.3).finished())};
  std::vector<std::pair<int, int>> pairs{{0, 1}};
  worst = std::max(worst, pose_loss(g, g, pairs));
  return worst;
}

}  // namespace

std::vector<CheckResult> run_selfcheck() {
  return {
      bounded("se3 exp/log round trip", 1e-10, exp_log_roundtrip),
      bounded("reprojection jacobian vs central differences", 1e-4, jacobian_vs_differences),
      bounded("schur solve matches dense solve", 1e-8, schur_vs_dense),
      bounded("bundle adjustment recovers exact poses and depths", 1e-6, ba_recovers_truth),
      bounded("umeyama recovers a known similarity", 1e-9, umeyama_recovery),
      bounded("trajectory text round trip", 1e-9, tum_roundtrip),
      bounded("image and feature map binary round trip", 0.5, binary_roundtrips),
      bounded("salient scores within [0, 1]", 1e-12, saliency_bounds),
      bounded("match distribution sums to one", 1e-9, match_distribution_sum),
      bounded("homography correspondences", 1e-9, homography_correspondence),
      bounded("loss fixed points", 1e-9, loss_fixed_points),
  };
}

}  // namespace svo
