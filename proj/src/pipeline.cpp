#include "svo/pipeline.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "svo/error.hpp"
#include "svo/parallel.hpp"
#include "svo/random.hpp"

namespace svo {

namespace {

void require(bool ok, const char* field, const char* rule) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, std::string(field) + " must be " + rule);
}

// Baseline-to-depth ratio below which the scale is left to the damping.
constexpr double kMinScaleBaseline = 1e-3;

double median(std::vector<double> values) {
  if (values.empty()) return 1.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  if (values.size() % 2 == 1) return values[mid];
  const double upper = values[mid];
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

}  // namespace

void PipelineConfig::validate() const {
  require(patches_per_frame > 0, "patches_per_frame", "positive");
  require(random_patches >= 0 && random_patches <= patches_per_frame, "random_patches",
          "in [0, patches_per_frame]");
  require(patch_radius > 0, "patch_radius", "positive");
  require(nms_radius > 0, "nms_radius", "positive");
  require(grid > 0, "grid", "positive");
  require(border >= patch_radius, "border", "at least patch_radius");
  require(removal_window >= 2, "removal_window", "at least 2");
  require(iterations >= 0, "iterations", "non-negative");
  require(neighborhood > 0 && neighborhood < removal_window, "neighborhood",
          "positive and below removal_window");
  require(gn_iterations > 0, "gn_iterations", "positive");
  require(correlation_side > 0 && correlation_side % 2 == 1, "correlation_side", "positive and odd");
  require(damping > 0.0 && std::isfinite(damping), "damping", "positive");
  require(oracle_sigma >= 0.0 && std::isfinite(oracle_sigma), "oracle_sigma", "non-negative");
  require(threads >= 0, "threads", "non-negative");
  require(features.stride == 1 || features.stride == 4, "features.stride", "1 or 4");
  require(features.fine_sigma > 0.0 && features.coarse_sigma > 0.0, "features sigmas", "positive");
  require(features.variance_radius > 0, "features.variance_radius", "positive");
}

VisualOdometry::VisualOdometry(PipelineConfig config, Intrinsics intrinsics,
                               const FlowProvider& provider)
    : config_(std::move(config)), intrinsics_(intrinsics), provider_(provider) {
  config_.validate();
  intrinsics_.validate();
}

const FrameState& VisualOdometry::frame(int id) const {
  // Active frames are stored by increasing id without gaps.
  return active_[static_cast<std::size_t>(id - active_.front().id)];
}

PatchSelection choose_patches(const FeatureMap& features, int width, int height, int n_salient,
                              int n_random, const PipelineConfig& config, std::uint64_t seed) {
  const int stride = features.stride();
  const ScoreMap scores = salient_score_map(features);
  std::vector<ScoredCenter> pool;
  bool shortfall = false;
  if (n_salient > 0) {
    const int map_border = (config.border + stride - 1) / stride;
    const SalientSelection sel =
        select_salient_patches(scores, n_salient, config.grid, config.nms_radius, map_border);
    for (const ScoredCenter& c : sel.centers) pool.push_back({c.x * stride, c.y * stride, c.score});
    shortfall = sel.shortfall;
  }
  const int salient = std::min(n_salient, static_cast<int>(pool.size()));
  PatchSelection out;
  out.shortfall = shortfall;
  out.set = build_patch_set(pool, salient, n_salient + n_random - salient, seed, width, height,
                            config.border);
  for (const PatchCenter& c : out.set.centers) {
    const int m = std::min(c.y / stride, scores.height - 1);
    const int n = std::min(c.x / stride, scores.width - 1);
    out.scores.push_back(scores.at(m, n));
  }
  return out;
}

void VisualOdometry::add_frame(const Image& image) {
  if (next_id_ == 0) {
    width_ = image.width();
    height_ = image.height();
  } else if (image.width() != width_ || image.height() != height_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "frame is " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                    ", session is " + std::to_string(width_) + "x" + std::to_string(height_));
  }

  FrameState f;
  f.id = next_id_;
  f.features = extract_features(image.channels() == 1 ? image : image.to_gray(), config_.features);

  f.patch_set = choose_patches(f.features, width_, height_,
                               config_.patches_per_frame - config_.random_patches,
                               config_.random_patches, config_,
                               derive_seed(config_.seed, 0x70617463ULL, static_cast<std::uint64_t>(f.id)))
                    .set;

  if (active_.empty()) {
    f.pose = Pose::Identity();
  } else if (active_.size() == 1) {
    f.pose = active_.back().pose;
  } else {
    const Pose& last = active_.back().pose;
    const Pose& prev = active_[active_.size() - 2].pose;
    f.pose = last * (prev.inverse() * last);
  }

  std::vector<double> previous;
  if (!active_.empty()) {
    for (const Patch& p : active_.back().patches) previous.push_back(p.inv_depth);
  }
  const double init_depth = median(previous);
  for (const PatchCenter& c : f.patch_set.centers) {
    Patch p;
    p.frame_id = f.id;
    p.center = Vec2(c.x, c.y);
    p.radius = config_.patch_radius;
    p.inv_depth = init_depth;
    f.patches.push_back(p);
  }

  for (const FrameState& g : active_) {
    if (f.id - g.id > config_.neighborhood) continue;
    for (int k = 0; k < static_cast<int>(g.patches.size()); ++k) {
      edges_.push_back({g.id, f.id, k});
    }
    for (int k = 0; k < static_cast<int>(f.patches.size()); ++k) {
      edges_.push_back({f.id, g.id, k});
    }
  }
  active_.push_back(std::move(f));
  ++next_id_;
}

void VisualOdometry::iterate(int n) {
  if (n < 0) throw Error(ErrorCode::kInvalidArgument, "iteration count must be non-negative");
  if (n == 0) return;
  if (active_.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "iterate needs at least two active frames");
  }
  for (int i = 0; i < n; ++i) round();
}

void VisualOdometry::round() {
  const std::uint64_t round_id = round_counter_++;
  const bool with_corr = provider_.needs_correlation();
  const int first_id = active_.front().id;

  const std::size_t n_active = active_.size();
  std::vector<RelativePose> relative(n_active * n_active);
  for (std::size_t a = 0; a < n_active; ++a) {
    for (std::size_t b = 0; b < n_active; ++b) {
      if (a != b) relative[a * n_active + b] = relative_pose(active_[a].pose, active_[b].pose);
    }
  }

  // Reprojection and flow for every edge, one slot per edge.
  std::vector<std::vector<Vec2>> pixel_targets(config_.full_patch_residuals ? edges_.size() : 0);
  parallel_for(edges_.size(), config_.threads, [&](std::size_t e) {
    GraphEdge& edge = edges_[e];
    const FrameState& src = frame(edge.source);
    const FrameState& dst = frame(edge.target);
    const Patch& patch = src.patches[edge.patch];
    const Reprojection rp = reproject_patch(
        patch, relative[static_cast<std::size_t>(edge.source - first_id) * n_active + (edge.target - first_id)],
        intrinsics_);
    edge.valid = rp.valid;
    if (!rp.valid) return;
    EdgeQuery query;
    query.source_frame = edge.source;
    query.target_frame = edge.target;
    query.patch_index = edge.patch;
    query.patch = &patch;
    query.reprojected = rp.coords;
    query.seed = derive_seed(config_.seed, static_cast<std::uint64_t>(edge.source),
                             static_cast<std::uint64_t>(edge.target),
                             static_cast<std::uint64_t>(edge.patch), round_id);
    std::optional<CorrelationMap> corr;
    if (with_corr) {
      corr = correlation_map(src.features, patch, dst.features, rp.coords, config_.correlation_side);
    }
    const FlowUpdate flow = provider_.estimate(query, corr ? &*corr : nullptr);
    const Vec2& centre = rp.coords[rp.coords.size() / 2];
    edge.target_position = centre + flow.delta;
    edge.weight = flow.confidence;
    if (config_.full_patch_residuals) {
      auto& targets = pixel_targets[e];
      targets.reserve(rp.coords.size());
      for (const Vec2& c : rp.coords) targets.push_back(c + flow.delta);
    }
  });

  BAProblem problem;
  problem.intrinsics = intrinsics_;
  std::vector<int> patch_offset;
  for (const FrameState& f : active_) {
    problem.poses.push_back(f.pose);
    patch_offset.push_back(static_cast<int>(problem.patches.size()));
    for (Patch p : f.patches) {
      p.frame_id = f.id - first_id;
      problem.patches.push_back(p);
    }
  }
  problem.modes.assign(active_.size(), PoseMode::kFree);
  problem.modes[0] = PoseMode::kFixed;
  // Scale is held by the distance from the oldest frame to the newest frame
  // that was already optimised before this one arrived, once that baseline
  // is a measurable fraction of the scene depth.
  if (active_.size() >= 3) {
    const std::size_t scale_frame = active_.size() - 2;
    std::vector<double> depths;
    for (const Patch& p : problem.patches) depths.push_back(p.inv_depth);
    const double baseline =
        (active_[scale_frame].pose.translation() - active_[0].pose.translation()).norm();
    if (baseline * median(std::move(depths)) > kMinScaleBaseline) {
      problem.modes[scale_frame] = PoseMode::kFixedNorm;
    }
  }
  problem.edges.reserve(edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const GraphEdge& g = edges_[e];
    BAEdge b;
    b.source = g.source - first_id;
    b.target = g.target - first_id;
    b.patch = patch_offset[b.source] + g.patch;
    b.target_position = g.target_position;
    b.weight = g.weight;
    b.valid = g.valid;
    if (config_.full_patch_residuals) b.pixel_targets = std::move(pixel_targets[e]);
    problem.edges.push_back(std::move(b));
  }

  BAOptions options;
  options.iterations = config_.gn_iterations;
  options.damping = config_.damping;
  options.full_patch_residuals = config_.full_patch_residuals;
  BASolution sol;
  try {
    sol = weighted_ba(problem, options);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSingularSystem && e.code() != ErrorCode::kNoValidEdges) throw;
    active_.back().flagged = true;
    ++singular_solves_;
    return;
  }
  for (std::size_t f = 0; f < active_.size(); ++f) {
    active_[f].pose = sol.poses[f];
    for (std::size_t k = 0; k < active_[f].patches.size(); ++k) {
      active_[f].patches[k].inv_depth = sol.inv_depths[patch_offset[f] + k];
    }
  }
}

void VisualOdometry::prune() {
  const std::size_t window = static_cast<std::size_t>(config_.removal_window);
  if (active_.size() <= window) return;
  const std::size_t drop = active_.size() - window;
  const int first_kept = active_[drop].id;
  for (std::size_t i = 0; i < drop; ++i) {
    log_.push_back({static_cast<double>(active_[i].id), active_[i].pose});
  }
  active_.erase(active_.begin(), active_.begin() + static_cast<std::ptrdiff_t>(drop));
  std::erase_if(edges_, [&](const GraphEdge& e) {
    return e.source < first_kept || e.target < first_kept;
  });
}

GraphAudit VisualOdometry::audit() const {
  GraphAudit out;
  out.edges = edges_.size();
  auto fail = [&](std::string why) {
    if (out.ok) {
      out.ok = false;
      out.problem = std::move(why);
    }
  };
  if (active_.size() > static_cast<std::size_t>(config_.removal_window) + 1) {
    fail("active frames exceed the removal window");
  }
  for (std::size_t i = 1; i < active_.size(); ++i) {
    if (active_[i].id != active_[i - 1].id + 1) fail("active frame ids are not consecutive");
  }
  for (std::size_t i = 1; i < log_.size(); ++i) {
    if (!(log_[i].stamp > log_[i - 1].stamp)) fail("trajectory log out of order");
  }
  if (!log_.empty() && !active_.empty() && log_.back().stamp >= active_.front().id) {
    fail("logged frame still active");
  }
  std::map<std::pair<int, int>, std::size_t> per_pair;
  for (const GraphEdge& e : edges_) {
    if (active_.empty() || e.source < active_.front().id || e.source > active_.back().id ||
        e.target < active_.front().id || e.target > active_.back().id) {
      fail("edge references an inactive frame");
      continue;
    }
    if (e.source == e.target) fail("edge with source == target");
    if (e.patch < 0 || e.patch >= static_cast<int>(frame(e.source).patches.size())) {
      fail("edge references a missing patch");
    }
    ++per_pair[{e.source, e.target}];
  }
  for (const FrameState& a : active_) {
    for (const FrameState& b : active_) {
      if (a.id == b.id || std::abs(a.id - b.id) > config_.neighborhood) continue;
      out.expected_edges += a.patches.size();
      const auto it = per_pair.find({a.id, b.id});
      if (it == per_pair.end() || it->second != a.patches.size()) fail("edge count mismatch");
    }
  }
  if (out.expected_edges != out.edges) fail("edge count mismatch");
  return out;
}

Trajectory VisualOdometry::trajectory() const {
  Trajectory out;
  for (const StampedPose& s : log_) out.push_back(s.stamp, s.pose);
  for (const FrameState& f : active_) out.push_back(static_cast<double>(f.id), f.pose);
  return out;
}

std::unique_ptr<FlowProvider> make_provider(const PipelineConfig& config,
                                            const GroundTruthSource* truth) {
  if (config.provider == ProviderKind::kTracker) return std::make_unique<TrackerFlowProvider>();
  if (truth == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "the oracle provider needs ground truth");
  }
  return std::make_unique<OracleFlowProvider>(*truth, config.oracle_sigma);
}

Trajectory run_sequence(const std::vector<Image>& frames, const Intrinsics& intrinsics,
                        const PipelineConfig& config, const GroundTruthSource* truth) {
  if (frames.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two frames");
  const auto provider = make_provider(config, truth);
  VisualOdometry vo(config, intrinsics, *provider);
  for (const Image& image : frames) {
    vo.add_frame(image);
    if (vo.active().size() >= 2) vo.iterate(config.iterations);
    vo.prune();
  }
  return vo.trajectory();
}

}  // namespace svo
