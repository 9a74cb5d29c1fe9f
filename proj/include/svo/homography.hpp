#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "svo/geometry.hpp"
#include "svo/image.hpp"

namespace svo {

// 3x3 projective transform normalised so that H(2,2) == 1.
using Homography = Eigen::Matrix3d;

Vec2 apply_homography(const Homography& h, const Vec2& p);

// Magnitudes at full growth g(t) = t / length. Translation and perspective
// jitter are fractions of min(width, height).
struct HomographySchedule {
  int length = 5;
  double scale = 0.15;
  double rotation = 0.2;  // radians
  double translation = 0.1;
  double perspective = 0.05;
};

// Scale, rotation about the image centre, translation and four-corner jitter,
// each uniform in [-sigma * g(t), sigma * g(t)]. Non-convex corner sets are
// resampled up to 10 times before Error(kDegenerateHomography).
Homography sample_homography(int t, const HomographySchedule& schedule, int width, int height,
                             std::uint64_t seed);

// Homography mapping four source points onto four destination points.
Homography homography_from_points(const std::vector<Vec2>& src, const std::vector<Vec2>& dst);

struct OcclusionConfig {
  bool enabled = true;
  int superpixels = 16;
  double compactness = 10.0;
  int iterations = 5;
  int max_segments = 3;
  double min_fraction = 0.01;
  double max_fraction = 0.35;
};

struct AugmentationConfig {
  double gain = 0.2;           // global gain drawn from [1 - gain, 1 + gain]
  double gain_gradient = 0.2;  // linear illumination ramp across the image
  double bias = 10.0;          // intensity levels
  double saturation = 0.2;     // RGB only
  double hue = 0.1;            // radians, RGB only
  int max_blur_length = 5;     // pixels
  OcclusionConfig occlusion;
};

class OcclusionRegion {
 public:
  OcclusionRegion() = default;
  OcclusionRegion(int width, int height)
      : width_(width), height_(height), mask_(static_cast<std::size_t>(width) * height, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_ && mask_[index(x, y)] != 0;
  }
  void set(int x, int y, bool value) { mask_[index(x, y)] = value ? 1 : 0; }
  std::size_t area() const;
  double fraction() const;
  bool empty() const { return area() == 0; }
  bool is_4_connected() const;

  const std::vector<std::uint8_t>& mask() const { return mask_; }

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> mask_;
};

struct Superpixels {
  int width = 0;
  int height = 0;
  int count = 0;
  std::vector<int> labels;  // row-major, each label 4-connected

  int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

// Grid-seeded k-means over (x, y, intensity) with connectivity enforcement.
Superpixels slic_superpixels(const Image& image, int count, double compactness, int iterations);

// Random connected union of 1..max_segments adjacent superpixels whose area
// fraction lies in [min_fraction, max_fraction] (best effort after 50 draws).
OcclusionRegion superpixel_occlusion(const Image& image, std::uint64_t seed,
                                     const OcclusionConfig& config);

// Averages `length` bilinear samples along a segment at `angle` centred on
// each pixel; lengths <= 1 return the input.
Image motion_blur(const Image& image, int length, double angle);

struct AugmentationDescriptor {
  double gain = 1.0;
  double gain_x = 0.0;
  double gain_y = 0.0;
  double bias = 0.0;
  double saturation = 0.0;
  double hue = 0.0;
  int blur_length = 0;
  double blur_angle = 0.0;
  double occlusion_fraction = 0.0;
};

struct AugmentedImage {
  Image image;
  OcclusionRegion region;  // in input-image coordinates
  AugmentationDescriptor descriptor;
};

// Illumination gain/bias, saturation/hue (RGB only), motion blur, then the
// occlusion region painted with uniform noise.
AugmentedImage apply_augmentations(const Image& image, int t, const AugmentationConfig& config,
                                   std::uint64_t seed);

struct SequenceConfig {
  HomographySchedule schedule;
  AugmentationConfig augmentation;
};

struct HomographySequence {
  Image base;
  std::vector<Image> frames;               // I^1..I^N
  std::vector<Image> augmented;            // A^t(I^0), before warping
  std::vector<Homography> homographies;    // H^1..H^N
  std::vector<OcclusionRegion> occlusions;  // occluded pixels of frame t
  std::vector<AugmentationDescriptor> descriptors;

  int length() const { return static_cast<int>(frames.size()); }
};

// Frame t samples A^t(I^0) at (H^t)^-1 q with bilinear interpolation and zero padding.
HomographySequence generate_sequence(const Image& base, int length, const SequenceConfig& config,
                                     std::uint64_t seed);

Image warp_image(const Image& image, const Homography& h);

class VisibilityMask {
 public:
  VisibilityMask() = default;
  VisibilityMask(int frames, int points)
      : frames_(frames), points_(points), data_(static_cast<std::size_t>(frames) * points, 0) {}

  int frames() const { return frames_; }
  int points() const { return points_; }
  bool visible(int t, int l) const { return data_[static_cast<std::size_t>(t) * points_ + l] != 0; }
  void set(int t, int l, bool v) { data_[static_cast<std::size_t>(t) * points_ + l] = v ? 1 : 0; }
  std::size_t visible_count() const;

 private:
  int frames_ = 0;
  int points_ = 0;
  std::vector<std::uint8_t> data_;
};

struct Correspondences {
  std::vector<std::vector<Vec2>> positions;  // [frame index t-1][point]
  VisibilityMask visibility;
};

// p^t = H^t p^0; visible iff inside [0, W-1] x [0, H-1] and not occluded in frame t.
Correspondences gt_correspondence(const HomographySequence& seq, const std::vector<Vec2>& points);

// Initial reprojection guesses: targets plus uniform noise in [-D, D]^2.
std::vector<Vec2> perturb_initial_positions(const std::vector<Vec2>& targets, double max_offset,
                                            std::uint64_t seed);

}  // namespace svo
