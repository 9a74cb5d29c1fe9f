#pragma once

#include <span>
#include <utility>
#include <vector>

#include "svo/correlation.hpp"
#include "svo/geometry.hpp"
#include "svo/homography.hpp"

namespace svo {

// One (source frame i, target frame j, patch k) element of the patch graph.
struct Edge {
  int source = 0;
  int target = 0;
  int patch = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Throws Error(kInvalidArgument) on i == j, duplicates, or (when the limits are
// positive) indices out of range.
void validate_edges(std::span<const Edge> edges, int frame_count = 0, int patch_count = 0);

struct GridIndex {
  int row = 0;
  int col = 0;
};

inline constexpr double kDefaultTemperature = 10.0;

// Softmax over all H*W locations of gamma * <F(m,n), f0>. Throws
// Error(kZeroFeature) when |f0| < 1e-12.
std::vector<double> feature_match_distribution(const FeatureMap& map, std::span<const float> f0,
                                               double gamma = kDefaultTemperature);

// Probability mass of the distribution above at `gt`.
double feature_match_prob(const FeatureMap& map, std::span<const float> f0, GridIndex gt,
                          double gamma = kDefaultTemperature);

// Natural log of feature_match_prob, evaluated without underflow.
double feature_match_log_prob(const FeatureMap& map, std::span<const float> f0, GridIndex gt,
                              double gamma = kDefaultTemperature);

// Visibility-masked cross-entropy averaged over visible (t, l) pairs.
// maps[t] is the feature map of frame t; gt[t][l] the true cell of point l.
// Throws Error(kAllOccluded) when nothing is visible.
double feature_loss(std::span<const FeatureMap> maps,
                    std::span<const std::vector<float>> source_features,
                    const std::vector<std::vector<GridIndex>>& gt, const VisibilityMask& visible,
                    double gamma = kDefaultTemperature);

// Sum over edges of r^T diag(w) r - log det diag(w), r = gt - est. Throws
// Error(kNonPositiveWeight) for any weight <= 0.
double flow_nll_loss(std::span<const Edge> edges, std::span<const Vec2> gt_delta,
                     std::span<const Vec2> est_delta, std::span<const Vec2> weights);

struct LossWeights {
  double salient = 1.0;
  double random = 0.2;
  double flow = 0.4;
};

struct LossBreakdown {
  double feature_salient = 0.0;
  double feature_random = 0.0;
  double flow = 0.0;
  double total = 0.0;
  LossWeights weights;
};

LossBreakdown combined_pretrain_loss(double feature_salient, double feature_random, double flow,
                                     const LossWeights& weights = {});

// Sum over pairs (i, j) of |log(G_ij^-1 T_ij)| with X_ij = X_j * X_i^-1.
// Throws Error(kAngleNearPi) when an error rotation is too close to pi.
double pose_loss(std::span<const Pose> ground_truth, std::span<const Pose> estimate,
                 std::span<const std::pair<int, int>> pairs);

}  // namespace svo
