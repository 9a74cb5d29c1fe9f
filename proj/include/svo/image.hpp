#pragma once

#include <cstddef>
#include <vector>

namespace svo {

// Row-major, channel-interleaved float image. Intensities use the 0..255 range
// of the 8-bit files they are read from.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels = 1, float fill = 0.0f)
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  float& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  float at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  // Luminance (ITU-R BT.601) for RGB, a copy for grayscale.
  Image to_gray() const;

  // Bilinear sample of channel c; returns `outside` unless 0 <= x <= W-1 and 0 <= y <= H-1.
  float sample(double x, double y, int c = 0, float outside = 0.0f) const;
  // Bilinear sample with coordinates clamped to the image.
  float sample_clamped(double x, double y, int c = 0) const;

  friend bool operator==(const Image& a, const Image& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.channels_ == b.channels_ &&
           a.data_ == b.data_;
  }

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<float> data_;
};

// Separable Gaussian blur with clamped borders, applied per channel.
Image gaussian_blur(const Image& image, double sigma);

}  // namespace svo
