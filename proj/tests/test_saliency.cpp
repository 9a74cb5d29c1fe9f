#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "svo/error.hpp"
#include "svo/saliency.hpp"

using namespace svo;

TEST(Salience, ConstantMapInterior) {
  FeatureMap f(5, 5, 3, 1, 0.7f);
  const ScoreMap s = salient_score_map(f);
  EXPECT_NEAR(s.at(2, 2), 1.0 / 9.0, 1e-15);
}

TEST(Salience, MatchesTripleLoop) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = 3 + static_cast<int>(rng.uniform_index(8));
    const int w = 3 + static_cast<int>(rng.uniform_index(8));
    const int c = 1 + static_cast<int>(rng.uniform_index(5));
    const FeatureMap f = oracle::random_map(rng, h, w, c, trial % 2 ? -1.0 : 0.0, 2.0);
    const ScoreMap s = salient_score_map(f);
    const auto ref = oracle::salient_scores(f);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(s.scores[i], ref[i], 1e-12);
  }
}

TEST(Salience, SpikeDominatesNeighbours) {
  FeatureMap f(7, 7, 3, 1, 0.0f);
  f.at(3, 3, 1) = 10.0f;
  const ScoreMap s = salient_score_map(f);
  for (int dm = -1; dm <= 1; ++dm)
    for (int dn = -1; dn <= 1; ++dn)
      if (dm || dn) EXPECT_GT(s.at(3, 3), s.at(3 + dm, 3 + dn));
}

TEST(Salience, NonNegativeFeaturesScoreInUnitInterval) {
  Rng rng(22);
  const FeatureMap f = oracle::random_map(rng, 12, 12, 4);
  for (double v : salient_score_map(f).scores) {
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Salience, RejectsNonFinite) {
  FeatureMap f(4, 4, 2, 1, 0.5f);
  f.at(1, 1, 0) = std::numeric_limits<float>::quiet_NaN();
  try {
    salient_score_map(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteFeature);
  }
}

TEST(Salience, ArgmaxStableUnderFeatureScaling) {
  // Smooth map: per 3x3 window the location of the best score does not move.
  FeatureMap f(16, 16, 2);
  for (int m = 0; m < 16; ++m)
    for (int n = 0; n < 16; ++n) {
      f.at(m, n, 0) = static_cast<float>(0.5 + 0.4 * std::sin(0.1 * m) * std::cos(0.067 * n));
      f.at(m, n, 1) = static_cast<float>(0.5 + 0.4 * std::cos(0.083 * m + 0.033 * n));
    }
  auto argmax_windows = [](const ScoreMap& s) {
    std::vector<int> out;
    for (int m = 1; m + 1 < s.height; m += 3)
      for (int n = 1; n + 1 < s.width; n += 3) {
        int best = 0;
        double bv = -1;
        for (int k = 0; k < 9; ++k) {
          const double v = s.at(m - 1 + k / 3, n - 1 + k % 3);
          if (v > bv) bv = v, best = k;
        }
        out.push_back(best);
      }
    return out;
  };
  const auto ref = argmax_windows(salient_score_map(f));
  for (int step = 0; step <= 30; ++step) {
    const double c = 0.5 + 0.05 * step;
    FeatureMap g = f;
    for (float& v : g.data()) v = static_cast<float>(v * c);
    EXPECT_EQ(argmax_windows(salient_score_map(g)), ref) << "scale " << c;
  }
}

TEST(Select, UniformMapGivesCellAnchors) {
  ScoreMap s{8, 8, std::vector<double>(64, 0.5)};
  const SalientSelection sel = select_salient_patches(s, 4, 4, 1, 0);
  ASSERT_EQ(sel.centers.size(), 4u);
  const std::vector<std::pair<int, int>> expected{{0, 0}, {4, 0}, {0, 4}, {4, 4}};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(sel.centers[i].x, expected[i].first);
    EXPECT_EQ(sel.centers[i].y, expected[i].second);
  }
  EXPECT_FALSE(sel.shortfall);
}

TEST(Select, CloseCandidatesKeepOnlyTheHigher) {
  ScoreMap s{12, 12, std::vector<double>(144, 0.0)};
  s.at(5, 4) = 0.9;
  s.at(5, 7) = 0.8;
  const SalientSelection sel = select_salient_patches(s, 2, 1, 4, 0);
  ASSERT_GE(sel.centers.size(), 1u);
  EXPECT_EQ(sel.centers[0].x, 4);
  for (const auto& c : sel.centers) EXPECT_FALSE(c.x == 7 && c.y == 5);
}

TEST(Select, MatchesGreedyBruteForce) {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    ScoreMap s{40, 50, {}};
    for (int i = 0; i < 40 * 50; ++i) s.scores.push_back(rng.uniform());
    const int border = 1;
    const SalientSelection sel = select_salient_patches(s, 96, 1, 4, border);
    const auto ref = oracle::greedy_select(s, 96, 4, border);
    ASSERT_EQ(sel.centers.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_EQ(sel.centers[i].x, ref[i].x);
      EXPECT_EQ(sel.centers[i].y, ref[i].y);
    }
    EXPECT_EQ(sel.shortfall, ref.size() < 96);
  }
}

TEST(Select, InvariantsAndShortfall) {
  Rng rng(24);
  ScoreMap s{30, 30, {}};
  for (int i = 0; i < 900; ++i) s.scores.push_back(rng.uniform());
  const int border = 3, radius = 4;
  const SalientSelection sel = select_salient_patches(s, 500, 4, radius, border);
  EXPECT_TRUE(sel.shortfall);
  for (std::size_t i = 0; i < sel.centers.size(); ++i) {
    const auto& a = sel.centers[i];
    EXPECT_GE(a.x, border);
    EXPECT_GE(a.y, border);
    EXPECT_LT(a.x, 30 - border);
    EXPECT_LT(a.y, 30 - border);
    if (i > 0) EXPECT_GE(sel.centers[i - 1].score, a.score);
    for (std::size_t j = 0; j < i; ++j) {
      const auto& b = sel.centers[j];
      EXPECT_GT(std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)), radius);
    }
  }
}

TEST(Select, RaisingASurvivorKeepsIt) {
  Rng rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    ScoreMap s{24, 24, {}};
    for (int i = 0; i < 576; ++i) s.scores.push_back(rng.uniform());
    const SalientSelection before = select_salient_patches(s, 10, 3, 4, 1);
    const auto pick = before.centers[rng.uniform_index(before.centers.size())];
    s.at(pick.y, pick.x) += 0.5;
    const SalientSelection after = select_salient_patches(s, 10, 3, 4, 1);
    EXPECT_TRUE(std::any_of(after.centers.begin(), after.centers.end(),
                            [&](const ScoredCenter& c) { return c.x == pick.x && c.y == pick.y; }));
  }
}

namespace {

std::vector<ScoredCenter> pool_of(int n) {
  std::vector<ScoredCenter> pool;
  for (int i = 0; i < n; ++i) pool.push_back({10 + i % 20, 10 + i / 20, 1.0 - i * 1e-3});
  return pool;
}

}  // namespace

TEST(PatchSetBuild, NoRandomIsSalientOnly) {
  const auto pool = pool_of(30);
  const PatchSet p = build_patch_set(pool, 30, 0, 5, 64, 64, 2);
  EXPECT_EQ(p.centers.size(), 30u);
  EXPECT_EQ(p.count(PatchLabel::kRandom), 0u);
  std::set<std::pair<int, int>> got, want;
  for (const auto& c : p.centers) got.insert({c.x, c.y});
  for (const auto& c : pool) want.insert({c.x, c.y});
  EXPECT_EQ(got, want);
}

TEST(PatchSetBuild, SameSeedSameSet) {
  const auto pool = pool_of(50);
  const PatchSet a = build_patch_set(pool, 20, 10, 77, 64, 64, 2);
  const PatchSet b = build_patch_set(pool, 20, 10, 77, 64, 64, 2);
  ASSERT_EQ(a.centers.size(), b.centers.size());
  for (std::size_t i = 0; i < a.centers.size(); ++i) {
    EXPECT_EQ(a.centers[i].x, b.centers[i].x);
    EXPECT_EQ(a.centers[i].y, b.centers[i].y);
    EXPECT_EQ(a.centers[i].label, b.centers[i].label);
  }
}

TEST(PatchSetBuild, SixtyPlusTwenty) {
  const auto pool = pool_of(200);
  const PatchSet p = build_patch_set(pool, 60, 20, 3, 64, 64, 2);
  EXPECT_EQ(p.centers.size(), 80u);
  EXPECT_EQ(p.count(PatchLabel::kSalient), 60u);
  std::set<std::pair<int, int>> salient;
  for (const auto& c : p.centers) {
    EXPECT_GE(c.x, 2);
    EXPECT_LT(c.x, 62);
    if (c.label == PatchLabel::kSalient) salient.insert({c.x, c.y});
  }
  EXPECT_EQ(salient.size(), 60u);
}

TEST(PatchSetBuild, EmptyPool) {
  try {
    build_patch_set({}, 3, 0, 1, 32, 32, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyPool);
  }
}
