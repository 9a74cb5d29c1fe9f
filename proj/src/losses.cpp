#include "svo/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "svo/error.hpp"

namespace svo {

void validate_edges(std::span<const Edge> edges, int frame_count, int patch_count) {
  std::set<Edge> seen;
  for (const Edge& e : edges) {
    if (e.source == e.target) {
      throw Error(ErrorCode::kInvalidArgument,
                  "edge with source == target (" + std::to_string(e.source) + ")");
    }
    if (e.source < 0 || e.target < 0 || e.patch < 0 ||
        (frame_count > 0 && (e.source >= frame_count || e.target >= frame_count)) ||
        (patch_count > 0 && e.patch >= patch_count)) {
      throw Error(ErrorCode::kInvalidArgument, "edge index out of range");
    }
    if (!seen.insert(e).second) throw Error(ErrorCode::kInvalidArgument, "duplicate edge");
  }
}

namespace {

std::vector<double> logits(const FeatureMap& map, std::span<const float> f0, double gamma) {
  if (static_cast<int>(f0.size()) != map.channels()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature length does not match map channels");
  }
  double norm = 0.0;
  for (float v : f0) norm += static_cast<double>(v) * v;
  if (std::sqrt(norm) < 1e-12) throw Error(ErrorCode::kZeroFeature, "source feature has zero norm");

  std::vector<double> out(static_cast<std::size_t>(map.height()) * map.width());
  for (int m = 0; m < map.height(); ++m) {
    for (int n = 0; n < map.width(); ++n) {
      const auto cell = map.cell(m, n);
      double dot = 0.0;
      for (int c = 0; c < map.channels(); ++c) dot += static_cast<double>(cell[c]) * f0[c];
      out[static_cast<std::size_t>(m) * map.width() + n] = gamma * dot;
    }
  }
  return out;
}

// log sum exp with max subtraction; returns (max, log sum exp(l - max)).
std::pair<double, double> log_normaliser(const std::vector<double>& l) {
  const double mx = *std::max_element(l.begin(), l.end());
  double sum = 0.0;
  for (double v : l) sum += std::exp(v - mx);
  return {mx, std::log(sum)};
}

void check_cell(const FeatureMap& map, GridIndex gt) {
  if (gt.row < 0 || gt.col < 0 || gt.row >= map.height() || gt.col >= map.width()) {
    throw Error(ErrorCode::kOutOfBounds, "ground-truth cell outside the feature map");
  }
}

}  // namespace

std::vector<double> feature_match_distribution(const FeatureMap& map, std::span<const float> f0,
                                               double gamma) {
  std::vector<double> l = logits(map, f0, gamma);
  const auto [mx, log_sum] = log_normaliser(l);
  for (double& v : l) v = std::exp(v - mx - log_sum);
  return l;
}

double feature_match_log_prob(const FeatureMap& map, std::span<const float> f0, GridIndex gt,
                              double gamma) {
  check_cell(map, gt);
  const std::vector<double> l = logits(map, f0, gamma);
  const auto [mx, log_sum] = log_normaliser(l);
  return l[static_cast<std::size_t>(gt.row) * map.width() + gt.col] - mx - log_sum;
}

double feature_match_prob(const FeatureMap& map, std::span<const float> f0, GridIndex gt,
                          double gamma) {
  return std::exp(feature_match_log_prob(map, f0, gt, gamma));
}

double feature_loss(std::span<const FeatureMap> maps,
                    std::span<const std::vector<float>> source_features,
                    const std::vector<std::vector<GridIndex>>& gt, const VisibilityMask& visible,
                    double gamma) {
  if (static_cast<int>(maps.size()) != visible.frames() || gt.size() != maps.size() ||
      static_cast<int>(source_features.size()) != visible.points()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature loss inputs disagree in size");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (int t = 0; t < visible.frames(); ++t) {
    if (static_cast<int>(gt[t].size()) != visible.points()) {
      throw Error(ErrorCode::kDimensionMismatch, "ground-truth list size mismatch");
    }
    for (int l = 0; l < visible.points(); ++l) {
      if (!visible.visible(t, l)) continue;
      sum += feature_match_log_prob(maps[t], source_features[l], gt[t][l], gamma);
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::kAllOccluded, "no visible correspondence");
  return -sum / static_cast<double>(count);
}

double flow_nll_loss(std::span<const Edge> edges, std::span<const Vec2> gt_delta,
                     std::span<const Vec2> est_delta, std::span<const Vec2> weights) {
  if (gt_delta.size() != edges.size() || est_delta.size() != edges.size() ||
      weights.size() != edges.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "flow loss inputs disagree in size");
  }
  validate_edges(edges);
  double loss = 0.0;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Vec2& w = weights[e];
    if (!(w.x() > 0.0) || !(w.y() > 0.0)) {
      throw Error(ErrorCode::kNonPositiveWeight, "confidence weights must be > 0");
    }
    const Vec2 r = gt_delta[e] - est_delta[e];
    loss += w.x() * r.x() * r.x() + w.y() * r.y() * r.y() - std::log(w.x() * w.y());
  }
  return loss;
}

LossBreakdown combined_pretrain_loss(double feature_salient, double feature_random, double flow,
                                     const LossWeights& weights) {
  if (!std::isfinite(feature_salient) || !std::isfinite(feature_random) || !std::isfinite(flow)) {
    throw Error(ErrorCode::kInvalidArgument, "loss parts must be finite");
  }
  LossBreakdown out;
  out.feature_salient = feature_salient;
  out.feature_random = feature_random;
  out.flow = flow;
  out.weights = weights;
  out.total = weights.salient * feature_salient + weights.random * feature_random +
              weights.flow * flow;
  return out;
}

double pose_loss(std::span<const Pose> ground_truth, std::span<const Pose> estimate,
                 std::span<const std::pair<int, int>> pairs) {
  if (ground_truth.size() != estimate.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "pose lists differ in length");
  }
  const int n = static_cast<int>(ground_truth.size());
  double loss = 0.0;
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw Error(ErrorCode::kInvalidArgument, "pose pair index out of range");
    }
    const Pose g_ij = ground_truth[j] * ground_truth[i].inverse();
    const Pose t_ij = estimate[j] * estimate[i].inverse();
    loss += se3_log(g_ij.inverse() * t_ij).norm();
  }
  return loss;
}

}  // namespace svo
