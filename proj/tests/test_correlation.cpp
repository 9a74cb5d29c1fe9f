#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "svo/correlation.hpp"
#include "svo/error.hpp"

using namespace svo;

namespace {

Image random_image(Rng& rng, int w, int h) {
  Image im(w, h);
  for (float& v : im.data()) v = static_cast<float>(rng.uniform(0, 255));
  return im;
}

// Smooth distinct-feature image: a sum of Gaussian blobs.
// Feature map whose cells are translated copies: target(m, n) = source(m - sy, n - sx).
void shifted_pair(Rng& rng, int sx, int sy, FeatureMap& src, FeatureMap& tgt) {
  const int h = 40, w = 40, c = 4;
  FeatureMap big = oracle::random_map(rng, h + 20, w + 20, c);
  for (int m = 0; m < h + 20; ++m)
    for (int n = 0; n < w + 20; ++n) {
      double norm = 0;
      for (int k = 0; k < c; ++k) norm += big.at(m, n, k) * big.at(m, n, k);
      for (int k = 0; k < c; ++k) big.at(m, n, k) = static_cast<float>(big.at(m, n, k) / std::sqrt(norm));
    }
  src = FeatureMap(h, w, c);
  tgt = FeatureMap(h, w, c);
  for (int m = 0; m < h; ++m)
    for (int n = 0; n < w; ++n)
      for (int k = 0; k < c; ++k) {
        src.at(m, n, k) = big.at(m + 10, n + 10, k);
        tgt.at(m, n, k) = big.at(m + 10 - sy, n + 10 - sx, k);
      }
}

Patch patch_at(double x, double y, int radius = 1) {
  Patch p;
  p.center = Vec2(x, y);
  p.radius = radius;
  return p;
}

}  // namespace

TEST(Features, ConstantImage) {
  const FeatureMap f = extract_features(Image(32, 24, 1, 80.0f));
  for (int m = 0; m < f.height(); ++m)
    for (int n = 0; n < f.width(); ++n) {
      for (int c = 1; c < kFeatureChannels; ++c) EXPECT_EQ(f.at(m, n, c), 0.0f);
      EXPECT_EQ(f.at(m, n, 0), f.at(0, 0, 0));
    }
}

TEST(Features, VerticalEdgeResponse) {
  Image im(40, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 40; ++x) im.at(x, y) = x < 20 ? 0.0f : 255.0f;
  const FeatureMap f = extract_features(im);
  for (int m = 4; m < 28; ++m) {
    float best = -1;
    int arg = -1;
    for (int n = 0; n < 40; ++n)
      if (f.at(m, n, 1) > best) best = f.at(m, n, 1), arg = n;
    EXPECT_TRUE(arg == 19 || arg == 20) << "row " << m << " peak at " << arg;
    EXPECT_LT(f.at(m, 2, 1), 1e-3f);
    EXPECT_LT(f.at(m, 37, 1), 1e-3f);
  }
}

TEST(Features, RandomImageNormalised) {
  Rng rng(31);
  for (int stride : {1, 4}) {
    FeatureConfig cfg;
    cfg.stride = stride;
    const FeatureMap f = extract_features(random_image(rng, 48, 36), cfg);
    EXPECT_EQ(f.channels(), kFeatureChannels);
    EXPECT_EQ(f.stride(), stride);
    for (float v : f.data()) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(Features, TooSmall) {
  try {
    extract_features(Image(15, 40));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kImageTooSmall);
  }
}

TEST(Lookup, IntegerCoordinateIsExact) {
  Rng rng(32);
  const FeatureMap f = oracle::random_map(rng, 9, 11, 3);
  std::vector<float> out(3);
  ASSERT_TRUE(lookup(f, Vec2(4, 6), out));
  for (int c = 0; c < 3; ++c) EXPECT_EQ(out[c], f.at(6, 4, c));
}

TEST(Lookup, MidpointIsAverage) {
  FeatureMap f(1, 2, 1);
  f.at(0, 0, 0) = 2.0f;
  f.at(0, 1, 0) = 5.0f;
  std::vector<float> out(1);
  ASSERT_TRUE(lookup(f, Vec2(0.5, 0.0), out));
  EXPECT_FLOAT_EQ(out[0], 3.5f);
}

TEST(Lookup, MatchesFourTermFormula) {
  Rng rng(33);
  for (int stride : {1, 4}) {
    const FeatureMap f = oracle::random_map(rng, 10, 12, 5, 0, 1, stride);
    std::vector<float> out(5);
    std::vector<double> ref;
    for (int i = 0; i < 2000; ++i) {
      const Vec2 p(rng.uniform(-2, 12.0 * stride), rng.uniform(-2, 10.0 * stride));
      const bool inside = lookup(f, p, out);
      EXPECT_EQ(inside, oracle::bilinear(f, p, ref));
      for (int c = 0; c < 5; ++c) EXPECT_NEAR(out[c], ref[c], 1e-6);
    }
  }
}

TEST(Lookup, LinearAlongGridAxis) {
  Rng rng(34);
  const FeatureMap f = oracle::random_map(rng, 6, 6, 2);
  std::vector<float> a(2), b(2), mid(2);
  for (double t : {0.1, 0.25, 0.6}) {
    lookup(f, Vec2(2, 3), a);
    lookup(f, Vec2(3, 3), b);
    lookup(f, Vec2(2 + t, 3), mid);
    for (int c = 0; c < 2; ++c) EXPECT_NEAR(mid[c], (1 - t) * a[c] + t * b[c], 1e-6);
  }
}

TEST(Correlation, MatchesNestedLoops) {
  Rng rng(35);
  for (int trial = 0; trial < 200; ++trial) {
    const int stride = trial % 3 == 0 ? 4 : 1;
    const FeatureMap src = oracle::random_map(rng, 14, 16, 3, 0, 1, stride);
    const FeatureMap tgt = oracle::random_map(rng, 14, 16, 3, 0, 1, stride);
    const int radius = 1 + trial % 2;
    const Patch p = patch_at(stride * rng.uniform_int(radius, 15 - radius),
                             stride * rng.uniform_int(radius, 13 - radius), radius);
    std::vector<Vec2> reproj;
    // Mix of whole-pixel and fractional targets, some near or past the border.
    const Vec2 shift(rng.uniform(-4, 4) * stride, rng.uniform(-4, 4) * stride);
    for (const Vec2& q : p.pixels()) reproj.push_back(trial % 4 == 1 ? Vec2(q + Vec2(2, -1)) : Vec2(q + shift));
    const int side = trial % 2 ? 7 : 5;
    const CorrelationMap corr = correlation_map(src, p, tgt, reproj, side);
    const auto ref = oracle::correlation(src, p, tgt, reproj, side);
    ASSERT_EQ(corr.values.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(corr.values[i], ref[i], 1e-6);
  }
}

TEST(Correlation, SelfPeakAtZeroOffset) {
  Rng rng(36);
  FeatureMap f(30, 30, 6);
  for (float& v : f.data()) v = static_cast<float>(rng.uniform());
  // Unit-normalise every cell so the self dot product is the maximum.
  for (int m = 0; m < 30; ++m)
    for (int n = 0; n < 30; ++n) {
      double norm = 0;
      for (int c = 0; c < 6; ++c) norm += f.at(m, n, c) * f.at(m, n, c);
      for (int c = 0; c < 6; ++c) f.at(m, n, c) = static_cast<float>(f.at(m, n, c) / std::sqrt(norm));
    }
  const Patch p = patch_at(15, 15);
  const auto px = p.pixels();
  const CorrelationMap corr = correlation_map(f, p, f, px, 7);
  for (int i = 0; i < corr.patch_pixels; ++i) {
    double best = -1;
    int by = -1, bx = -1;
    for (int dy = 0; dy < 7; ++dy)
      for (int dx = 0; dx < 7; ++dx)
        if (corr.at(i, dy, dx) > best) best = corr.at(i, dy, dx), by = dy, bx = dx;
    EXPECT_EQ(by, 3);
    EXPECT_EQ(bx, 3);
  }
}

TEST(Correlation, TranslatedCopyPeak) {
  Rng rng(37);
  FeatureMap src, tgt;
  shifted_pair(rng, 2, 0, src, tgt);
  const Patch p = patch_at(20, 20);
  const auto px = p.pixels();
  const CorrelationMap corr = correlation_map(src, p, tgt, px, 5);
  const TrackerResult r = argmax_flow(corr);
  EXPECT_FALSE(r.degenerate);
  EXPECT_NEAR(r.update.delta.x(), 2.0, 0.25);
  EXPECT_NEAR(r.update.delta.y(), 0.0, 0.25);
}

TEST(Correlation, OutsideCellsAreZeroAndInvalid) {
  Rng rng(38);
  const FeatureMap f = oracle::random_map(rng, 10, 10, 2);
  const Patch p = patch_at(5, 5);
  std::vector<Vec2> reproj;
  for (const Vec2& q : p.pixels()) reproj.push_back(q + Vec2(-20, 0));
  const CorrelationMap corr = correlation_map(f, p, f, reproj, 3);
  EXPECT_FALSE(corr.any_valid());
  for (double v : corr.values) EXPECT_EQ(v, 0.0);
}

TEST(Correlation, ErrorContracts) {
  Rng rng(39);
  const FeatureMap f = oracle::random_map(rng, 10, 10, 2);
  const Patch inside = patch_at(5, 5);
  const auto px = inside.pixels();
  EXPECT_THROW(correlation_map(f, inside, f, px, 4), Error);
  const Patch outside = patch_at(0, 5);
  const auto opx = outside.pixels();
  try {
    correlation_map(f, outside, f, opx, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfBounds);
  }
}

TEST(Tracker, RecoversIntegerShifts) {
  Rng rng(40);
  for (int sx = -3; sx <= 3; ++sx)
    for (int sy = -3; sy <= 3; ++sy) {
      FeatureMap src, tgt;
      shifted_pair(rng, sx, sy, src, tgt);
      const Patch p = patch_at(20, 20);
      const auto px = p.pixels();
      const TrackerResult r = argmax_flow(correlation_map(src, p, tgt, px, 7));
      EXPECT_NEAR(r.update.delta.x(), sx, 0.25);
      EXPECT_NEAR(r.update.delta.y(), sy, 0.25);
      EXPECT_GT(r.update.confidence.minCoeff(), 0.0);
    }
}

TEST(Tracker, ConstantMapIsDegenerate) {
  CorrelationMap corr;
  corr.patch_pixels = 9;
  corr.side = 7;
  corr.values.assign(9 * 49, 0.3);
  corr.valid.assign(9 * 49, 1);
  const TrackerResult r = argmax_flow(corr);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.update.delta, Vec2::Zero());
  EXPECT_EQ(r.update.confidence, Vec2::Constant(kTrackerConfidenceFloor));
}

TEST(Tracker, SubPixelShiftOnSmoothBlob) {
  auto blob = [](double cx) {
    FeatureMap f(48, 48, 2);
    for (int m = 0; m < 48; ++m)
      for (int n = 0; n < 48; ++n) {
        const double r2 = (n - cx) * (n - cx) + (m - 24.0) * (m - 24.0);
        f.at(m, n, 0) = static_cast<float>(std::exp(-r2 / (2 * 9.0)));
        f.at(m, n, 1) = static_cast<float>(0.5 * std::exp(-r2 / (2 * 16.0)));
      }
    return f;
  };
  const FeatureMap src = blob(24.0);
  const FeatureMap tgt = blob(25.5);
  const Patch p = patch_at(24, 24, 2);
  const auto px = p.pixels();
  const TrackerResult r = argmax_flow(correlation_map(src, p, tgt, px, 7));
  EXPECT_NEAR(r.update.delta.x(), 1.5, 0.3);
  EXPECT_NEAR(r.update.delta.y(), 0.0, 0.3);
}

TEST(OracleFlow, NoiselessHitsTruth) {
  const OracleTarget truth{Vec2(10.25, -3.5), true};
  const FlowUpdate u = oracle_flow(truth, Vec2(7.0, 1.0), 0.0, 9);
  EXPECT_EQ(Vec2(7.0, 1.0) + u.delta, truth.position);
  EXPECT_NEAR(u.confidence.x(), 1e6, 1e-6);
}

TEST(OracleFlow, SameSeedSameNoise) {
  const OracleTarget truth{Vec2(1, 2), true};
  EXPECT_EQ(oracle_flow(truth, Vec2::Zero(), 0.5, 123).delta, oracle_flow(truth, Vec2::Zero(), 0.5, 123).delta);
  EXPECT_NE(oracle_flow(truth, Vec2::Zero(), 0.5, 123).delta, oracle_flow(truth, Vec2::Zero(), 0.5, 124).delta);
}

TEST(OracleFlow, NoiseStatistics) {
  const OracleTarget truth{Vec2(0, 0), true};
  double sx = 0, sxx = 0, sy = 0, syy = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Vec2 d = oracle_flow(truth, Vec2::Zero(), 0.5, derive_seed(5, static_cast<std::uint64_t>(i))).delta;
    sx += d.x(), sxx += d.x() * d.x(), sy += d.y(), syy += d.y() * d.y();
  }
  const double stdx = std::sqrt(sxx / n - (sx / n) * (sx / n));
  const double stdy = std::sqrt(syy / n - (sy / n) * (sy / n));
  EXPECT_NEAR(stdx, 0.5, 0.05);
  EXPECT_NEAR(stdy, 0.5, 0.05);
}

TEST(OracleFlow, HiddenGetsFloorConfidence) {
  const FlowUpdate hidden = oracle_flow(OracleTarget{Vec2(1, 1), false}, Vec2::Zero(), 0.5, 1);
  const FlowUpdate missing = oracle_flow(std::nullopt, Vec2::Zero(), 0.5, 1);
  EXPECT_EQ(hidden.confidence, Vec2::Constant(kOracleHiddenConfidence));
  EXPECT_EQ(missing.confidence, Vec2::Constant(kOracleHiddenConfidence));
  const FlowUpdate seen = oracle_flow(OracleTarget{Vec2(1, 1), true}, Vec2::Zero(), 0.5, 1);
  EXPECT_NEAR(seen.confidence.x(), 1.0 / (0.25 + 1e-6), 1e-9);
}
