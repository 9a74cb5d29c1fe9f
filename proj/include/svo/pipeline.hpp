#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "svo/bundle_adjust.hpp"
#include "svo/correlation.hpp"
#include "svo/eval.hpp"
#include "svo/image.hpp"
#include "svo/saliency.hpp"

namespace svo {

enum class ProviderKind { kOracle, kTracker };

struct PipelineConfig {
  int patches_per_frame = 96;
  int random_patches = 0;  // of patches_per_frame; the rest are salient
  int patch_radius = 1;
  int nms_radius = 4;
  int grid = 8;
  int border = 4;
  int removal_window = 18;
  int iterations = 8;  // reproject/flow/BA rounds per frame
  int neighborhood = 13;
  int gn_iterations = 2;
  int correlation_side = 7;
  double damping = 1e-4;
  bool full_patch_residuals = false;
  ProviderKind provider = ProviderKind::kOracle;
  double oracle_sigma = 0.0;
  std::uint64_t seed = 0;
  int threads = 1;  // 0 = hardware concurrency
  FeatureConfig features;

  // Throws Error(kInvalidArgument) naming the first offending field.
  void validate() const;
};

struct PatchSelection {
  PatchSet set;
  std::vector<double> scores;  // salient score at each center
  bool shortfall = false;      // fewer salient survivors than requested; random centers fill the gap
};

// n_salient NMS-filtered salient centers plus n_random uniform ones, in image
// pixels. Uses the grid, nms_radius and border of `config`.
PatchSelection choose_patches(const FeatureMap& features, int width, int height, int n_salient,
                              int n_random, const PipelineConfig& config, std::uint64_t seed);

struct FrameState {
  int id = 0;
  Pose pose;
  FeatureMap features;
  PatchSet patch_set;
  std::vector<Patch> patches;
  bool flagged = false;  // a BA solve on this frame's window was singular
};

struct GraphEdge {
  int source = 0;  // frame id
  int target = 0;  // frame id
  int patch = 0;   // index into the source frame's patches
  Vec2 target_position = Vec2::Zero();
  Vec2 weight = Vec2::Constant(1e-3);
  bool valid = false;
};

struct GraphAudit {
  bool ok = true;
  std::string problem;
  std::size_t edges = 0;
  std::size_t expected_edges = 0;
};

class VisualOdometry {
 public:
  // `provider` must outlive the odometry object.
  VisualOdometry(PipelineConfig config, Intrinsics intrinsics, const FlowProvider& provider);

  // Throws Error(kDimensionMismatch) when the image size differs from the first frame.
  void add_frame(const Image& image);
  // n rounds of reproject, correlate, flow, BA. Needs >= 2 active frames when n > 0.
  void iterate(int n);
  // Removes frames beyond the removal window, logging their poses.
  void prune();

  GraphAudit audit() const;

  const std::vector<FrameState>& active() const { return active_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  const std::vector<StampedPose>& log() const { return log_; }
  int frame_count() const { return next_id_; }
  int singular_solves() const { return singular_solves_; }
  const PipelineConfig& config() const { return config_; }

  // Logged poses followed by the active ones, stamped with frame indices.
  Trajectory trajectory() const;

 private:
  void round();
  const FrameState& frame(int id) const;

  PipelineConfig config_;
  Intrinsics intrinsics_;
  const FlowProvider& provider_;
  int width_ = 0;
  int height_ = 0;
  int next_id_ = 0;
  std::uint64_t round_counter_ = 0;
  int singular_solves_ = 0;
  std::vector<FrameState> active_;
  std::vector<GraphEdge> edges_;
  std::vector<StampedPose> log_;
};

std::unique_ptr<FlowProvider> make_provider(const PipelineConfig& config,
                                            const GroundTruthSource* truth);

// add_frame, iterate, prune over the sequence. `truth` is required by the
// oracle provider.
Trajectory run_sequence(const std::vector<Image>& frames, const Intrinsics& intrinsics,
                        const PipelineConfig& config, const GroundTruthSource* truth = nullptr);

}  // namespace svo
