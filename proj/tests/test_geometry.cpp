#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "svo/error.hpp"
#include "svo/geometry.hpp"

using namespace svo;

namespace {

const Intrinsics kCam{320.0, 310.0, 160.0, 120.0};

double max_abs(const Mat4& a, const Mat4& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Se3, ZeroTwistIsIdentity) {
  EXPECT_EQ(se3_exp(Twist::Zero()).matrix(), Mat4::Identity());
}

TEST(Se3, QuarterTurnAboutX) {
  const Pose p = se3_exp((Twist() << 0, 0, 0, M_PI / 2, 0, 0).finished());
  Mat3 expected;
  expected << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  EXPECT_LT((p.rotation_matrix() - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(p.translation().norm(), 1e-15);
}

TEST(Se3, ExpMatchesTaylorSeries) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Twist xi = oracle::random_twist(rng, 1.5, 1.0);
    EXPECT_LT(max_abs(se3_exp(xi).matrix(), oracle::matrix_exp(xi)), 1e-9);
  }
}

TEST(Se3, LogOfIdentityIsZero) { EXPECT_EQ(se3_log(Pose()), Twist::Zero()); }

TEST(Se3, LogExpRoundTrip) {
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    Twist xi = oracle::random_twist(rng, 1.0, 1.0);
    if (xi.norm() >= 1.0) xi *= 0.99 / xi.norm();
    EXPECT_LT((se3_log(se3_exp(xi)) - xi).norm(), 1e-10);
  }
}

TEST(Se3, ExpLogRoundTripNearPi) {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    Vec3 axis(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    axis.normalize();
    const double angle = rng.uniform(0.0, M_PI - 1e-3);
    const Pose p(so3_exp(axis * angle), Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)));
    EXPECT_LT(max_abs(se3_exp(se3_log(p)).matrix(), p.matrix()), 1e-10);
  }
}

TEST(Se3, PureTranslationLog) {
  const Pose p(Eigen::Quaterniond::Identity(), Vec3(1, 2, 3));
  EXPECT_LT((se3_log(p) - (Twist() << 1, 2, 3, 0, 0, 0).finished()).norm(), 1e-15);
}

TEST(Se3, LogRejectsHalfTurn) {
  const Pose p(so3_exp(Vec3(M_PI, 0, 0)), Vec3::Zero());
  try {
    se3_log(p);
    FAIL() << "expected AngleNearPi";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAngleNearPi);
  }
}

TEST(Pose, CompositionInverseAndNorm) {
  Rng rng(14);
  for (int i = 0; i < 300; ++i) {
    const Pose a = se3_exp(oracle::random_twist(rng, 3, 2));
    const Pose b = se3_exp(oracle::random_twist(rng, 3, 2));
    const Pose c = se3_exp(oracle::random_twist(rng, 3, 2));
    EXPECT_LT(max_abs((a * a.inverse()).matrix(), Mat4::Identity()), 1e-12);
    EXPECT_LT(max_abs(((a * b) * c).matrix(), (a * (b * c)).matrix()), 1e-12);
    EXPECT_NEAR((a * b * c).rotation().norm(), 1.0, 1e-12);
  }
}

TEST(Reproject, SamePoseIsIdentity) {
  Rng rng(15);
  for (int i = 0; i < 100; ++i) {
    const Pose t = se3_exp(oracle::random_twist(rng, 2, 1));
    Patch p;
    p.center = Vec2(rng.uniform(10, 300), rng.uniform(10, 230));
    p.radius = 2;
    p.inv_depth = rng.uniform(0.1, 2);
    const Reprojection r = reproject_patch(p, t, t, kCam);
    ASSERT_TRUE(r.valid);
    const auto px = p.pixels();
    for (std::size_t k = 0; k < px.size(); ++k) EXPECT_LT((r.coords[k] - px[k]).norm(), 1e-12);
  }
}

TEST(Reproject, SidewaysTranslationParallax) {
  const double delta = 0.1, d = 0.5;
  Patch p;
  p.center = Vec2(100, 80);
  p.inv_depth = d;
  const Pose target(Eigen::Quaterniond::Identity(), Vec3(delta, 0, 0));
  const Reprojection r = reproject_patch(p, Pose(), target, kCam);
  EXPECT_NEAR(r.coords[4].x() - 100.0, -kCam.fx * delta * d, 1e-12);
  EXPECT_NEAR(r.coords[4].y(), 80.0, 1e-12);
}

TEST(Reproject, MatchesWorldPointProjection) {
  Rng rng(16);
  for (int i = 0; i < 500; ++i) {
    const Pose src = se3_exp(oracle::random_twist(rng, 1, 0.3));
    const Pose tgt = src * se3_exp(oracle::random_twist(rng, 0.2, 0.1));
    Patch p;
    p.center = Vec2(rng.uniform(20, 300), rng.uniform(20, 220));
    p.inv_depth = rng.uniform(0.2, 1.0);
    const Reprojection r = reproject_patch(p, src, tgt, kCam);
    if (!r.valid) continue;
    const auto px = p.pixels();
    for (std::size_t k = 0; k < px.size(); ++k) {
      EXPECT_LT((r.coords[k] - oracle::project_through_world(px[k], p.inv_depth, src, tgt, kCam)).norm(),
                1e-9);
    }
  }
}

TEST(Reproject, BehindCameraIsFlaggedNotThrown) {
  Patch p;
  p.center = Vec2(160, 120);
  p.inv_depth = 1.0;
  const Pose target(Eigen::Quaterniond::Identity(), Vec3(0, 0, 2.0));
  EXPECT_FALSE(reproject_patch(p, Pose(), target, kCam).valid);
}

TEST(Reproject, LeftGaugeInvariance) {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const Pose src = se3_exp(oracle::random_twist(rng, 1, 0.3));
    const Pose tgt = src * se3_exp(oracle::random_twist(rng, 0.2, 0.1));
    const Pose g = se3_exp(oracle::random_twist(rng, 5, 2));
    Patch p;
    p.center = Vec2(rng.uniform(20, 300), rng.uniform(20, 220));
    p.inv_depth = rng.uniform(0.2, 1.0);
    const Reprojection a = reproject_patch(p, src, tgt, kCam);
    const Reprojection b = reproject_patch(p, g * src, g * tgt, kCam);
    if (!a.valid) continue;
    for (std::size_t k = 0; k < a.coords.size(); ++k) EXPECT_LT((a.coords[k] - b.coords[k]).norm(), 1e-9);
  }
}

TEST(Jacobian, MatchesCentralDifferences) {
  Rng rng(18);
  const double h = 1e-6;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Pose src = se3_exp(oracle::random_twist(rng, 1, 0.5));
    const Pose tgt = src * se3_exp(oracle::random_twist(rng, 0.3, 0.15));
    Patch p;
    p.center = Vec2(rng.uniform(20, 300), rng.uniform(20, 220));
    p.inv_depth = rng.uniform(0.2, 1.0);
    const PatchJacobian j = reprojection_jacobian(p, src, tgt, kCam);
    if (!j.valid) continue;
    const auto px = p.pixels();
    for (std::size_t k = 0; k < px.size(); k += 4) {
      auto at = [&](const Pose& s, const Pose& t, double d) {
        return oracle::project_through_world(px[k], d, s, t, kCam);
      };
      auto rel = [](const Vec2& a, const Vec2& fd) { return (a - fd).norm() / std::max(1.0, fd.norm()); };
      for (int c = 0; c < 6; ++c) {
        Twist e = Twist::Zero();
        e[c] = h;
        const Vec2 fs = (at(src * se3_exp(e), tgt, p.inv_depth) - at(src * se3_exp(-e), tgt, p.inv_depth)) / (2 * h);
        const Vec2 ft = (at(src, tgt * se3_exp(e), p.inv_depth) - at(src, tgt * se3_exp(-e), p.inv_depth)) / (2 * h);
        worst = std::max({worst, rel(j.points[k].d_source.col(c), fs), rel(j.points[k].d_target.col(c), ft)});
      }
      const Vec2 fd = (at(src, tgt, p.inv_depth + h) - at(src, tgt, p.inv_depth - h)) / (2 * h);
      worst = std::max(worst, rel(j.points[k].d_inv_depth, fd));
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Jacobian, TargetXColumnAtIdentity) {
  Patch p;
  p.center = Vec2(kCam.cx, kCam.cy);
  p.inv_depth = 0.7;
  const PatchJacobian j = reprojection_jacobian(p, Pose(), Pose(), kCam);
  const PointJacobian& c = j.points[4];
  EXPECT_NEAR(c.d_target(0, 0), -kCam.fx * 0.7, 1e-12);
  EXPECT_NEAR(c.d_target(1, 0), 0.0, 1e-12);
}

TEST(Jacobian, SourceIsNegatedTargetAtSamePose) {
  Rng rng(19);
  for (int i = 0; i < 100; ++i) {
    const Pose t = se3_exp(oracle::random_twist(rng, 2, 1));
    Patch p;
    p.center = Vec2(rng.uniform(20, 300), rng.uniform(20, 220));
    p.inv_depth = rng.uniform(0.2, 1.0);
    const PatchJacobian j = reprojection_jacobian(p, t, t, kCam);
    for (const auto& pt : j.points) EXPECT_LT((pt.d_source + pt.d_target).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Intrinsics, RejectsNonPositiveFocal) {
  EXPECT_THROW((Intrinsics{0.0, 1.0, 0, 0}.validate()), Error);
  EXPECT_THROW((Intrinsics{1.0, -1.0, 0, 0}.validate()), Error);
  EXPECT_NO_THROW((Intrinsics{1.0, 1.0, 0, 0}.validate()));
}
