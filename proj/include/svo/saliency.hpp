#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "svo/correlation.hpp"

namespace svo {

struct ScoreMap {
  int height = 0;
  int width = 0;
  std::vector<double> scores;  // row-major

  double at(int m, int n) const { return scores[static_cast<std::size_t>(m) * width + n]; }
  double& at(int m, int n) { return scores[static_cast<std::size_t>(m) * width + n]; }
};

// s(m,n) = max_h alpha(m,n,h) * beta(m,n,h) where alpha is the softmax of channel h
// over the 3x3 neighbourhood (clipped at borders, centre included) and beta is
// the feature divided by the channel maximum at that cell. When the channel
// maximum is exactly zero, beta is 1 for zero-valued channels and 0 otherwise.
//
// Throws Error(kNonFiniteFeature) on NaN/Inf and Error(kInvalidArgument) for
// maps smaller than 3 x 3.
ScoreMap salient_score_map(const FeatureMap& features);

struct ScoredCenter {
  int x = 0;  // column
  int y = 0;  // row
  double score = 0.0;
};

struct SalientSelection {
  std::vector<ScoredCenter> centers;  // sorted by score descending, ties by (row, col)
  bool shortfall = false;             // fewer than k survivors
};

// Per grid cell keep the best pixel (ties: smallest (row, col)) among pixels at
// least `border` cells from every edge; sweep candidates in rank order and drop
// any within Chebyshev distance `nms_radius` of an already kept one; return the
// first k survivors.
SalientSelection select_salient_patches(const ScoreMap& scores, int k, int grid, int nms_radius,
                                        int border);

enum class PatchLabel { kSalient, kRandom };

std::string_view label_name(PatchLabel label);

struct PatchCenter {
  int x = 0;
  int y = 0;
  PatchLabel label = PatchLabel::kSalient;
};

struct PatchSet {
  std::vector<PatchCenter> centers;  // salient first, then random

  std::size_t count(PatchLabel label) const;
};

// Mixed set: n_salient centers drawn without replacement from the pool, then
// n_random centers drawn uniformly from pixels with border <= x < width - border
// and border <= y < height - border. Throws Error(kEmptyPool) when the pool is
// empty but salient centers are requested, and Error(kInsufficientCandidates)
// when the pool is smaller than n_salient.
PatchSet build_patch_set(const std::vector<ScoredCenter>& salient_pool, int n_salient,
                         int n_random, std::uint64_t seed, int width, int height, int border);

}  // namespace svo
