#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "svo/geometry.hpp"
#include "svo/image.hpp"

namespace svo {

// Dense H x W x C feature grid, row-major with channels fastest. One feature
// cell covers `stride` image pixels; cell (m, n) sits at image pixel
// (n * stride, m * stride).
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int height, int width, int channels, int stride = 1, float fill = 0.0f);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  int stride() const { return stride_; }

  float& at(int m, int n, int c) { return data_[index(m, n, c)]; }
  float at(int m, int n, int c) const { return data_[index(m, n, c)]; }

  std::span<const float> cell(int m, int n) const {
    return {data_.data() + index(m, n, 0), static_cast<std::size_t>(channels_)};
  }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t index(int m, int n, int c) const {
    return (static_cast<std::size_t>(m) * width_ + n) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  int stride_ = 1;
  std::vector<float> data_;
};

struct FeatureConfig {
  int stride = 1;            // 1 or 4
  double fine_sigma = 1.0;   // blur for intensity and first gradient scale
  double coarse_sigma = 2.5;  // second gradient-magnitude scale
  int variance_radius = 2;   // window half-width for the local variance channel
};

inline constexpr int kFeatureChannels = 6;

// Hand-crafted non-negative features: blurred intensity, |d/dx|, |d/dy|,
// gradient magnitude at two scales and local variance, each min-max scaled to
// [0, 1] per image (a constant channel becomes all zeros). Throws
// Error(kImageTooSmall) below 16 x 16.
FeatureMap extract_features(const Image& image, const FeatureConfig& config = {});

// Bilinear lookup at an image-pixel coordinate. Writes channels() values into
// `out` and returns false (with zeros written) when the coordinate falls outside
// the map.
bool lookup(const FeatureMap& map, const Vec2& pixel, std::span<float> out);

// C[pixel][dy][dx] = <F_target[reproj(pixel) + (dx, dy)], F_source[pixel]>,
// with offsets dx, dy in [-(s/2), s/2].
struct CorrelationMap {
  int patch_pixels = 0;
  int side = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  double at(int pixel, int dy_index, int dx_index) const {
    return values[(static_cast<std::size_t>(pixel) * side + dy_index) * side + dx_index];
  }
  bool any_valid() const;
};

// Throws Error(kInvalidArgument) for an even side and Error(kOutOfBounds) when a
// source patch pixel is outside the source map. Target cells outside the map are
// zero and marked invalid.
CorrelationMap correlation_map(const FeatureMap& source, const Patch& patch,
                               const FeatureMap& target, std::span<const Vec2> reprojected,
                               int side);

// delta in pixels; confidence is a diagonal precision weight per axis.
struct FlowUpdate {
  Vec2 delta = Vec2::Zero();
  Vec2 confidence = Vec2::Constant(1e-3);
};

inline constexpr double kTrackerConfidenceFloor = 1e-3;

struct TrackerResult {
  FlowUpdate update;
  bool degenerate = false;  // summed map was constant
};

// Non-learned tracker: argmax of the correlation summed over patch pixels,
// refined by a per-axis parabola through the peak and its neighbours.
TrackerResult argmax_flow(const CorrelationMap& corr);

// What the oracle knows about one edge.
struct OracleTarget {
  Vec2 position = Vec2::Zero();  // true pixel position in the target frame
  bool visible = true;           // false when occluded or out of frame
};

inline constexpr double kOracleHiddenConfidence = 1e-6;

// delta = truth - current + N(0, sigma^2) per axis, confidence 1 / (sigma^2 + 1e-6);
// hidden or missing truth gets confidence 1e-6.
FlowUpdate oracle_flow(const std::optional<OracleTarget>& truth, const Vec2& current,
                       double noise_sigma, std::uint64_t seed);

// Everything a flow provider may consult for one (source, target, patch) edge.
struct EdgeQuery {
  int source_frame = 0;
  int target_frame = 0;
  int patch_index = 0;
  const Patch* patch = nullptr;
  std::span<const Vec2> reprojected;  // patch pixels in the target frame
  std::uint64_t seed = 0;             // per-call noise seed
};

// Stand-in for the learned flow network.
class FlowProvider {
 public:
  virtual ~FlowProvider() = default;
  virtual bool needs_correlation() const = 0;
  // `corr` is non-null exactly when needs_correlation() is true.
  virtual FlowUpdate estimate(const EdgeQuery& query, const CorrelationMap* corr) const = 0;
};

class TrackerFlowProvider final : public FlowProvider {
 public:
  bool needs_correlation() const override { return true; }
  FlowUpdate estimate(const EdgeQuery& query, const CorrelationMap* corr) const override;
};

// Source of ground truth for the oracle provider.
class GroundTruthSource {
 public:
  virtual ~GroundTruthSource() = default;
  // True position in `target_frame` of the scene point seen at `pixel` in
  // `source_frame`; nullopt when it cannot be projected at all.
  virtual std::optional<OracleTarget> locate(int source_frame, const Vec2& pixel,
                                             int target_frame) const = 0;
};

class OracleFlowProvider final : public FlowProvider {
 public:
  OracleFlowProvider(const GroundTruthSource& truth, double noise_sigma)
      : truth_(truth), noise_sigma_(noise_sigma) {}

  bool needs_correlation() const override { return false; }
  FlowUpdate estimate(const EdgeQuery& query, const CorrelationMap* corr) const override;

 private:
  const GroundTruthSource& truth_;
  double noise_sigma_;
};

}  // namespace svo
