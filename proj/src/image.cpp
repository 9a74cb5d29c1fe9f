#include "svo/image.hpp"

#include <algorithm>
#include <cmath>

namespace svo {

Image Image::to_gray() const {
  if (channels_ == 1) return *this;
  Image out(width_, height_, 1);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      out.at(x, y) = 0.299f * at(x, y, 0) + 0.587f * at(x, y, 1) + 0.114f * at(x, y, 2);
    }
  }
  return out;
}

float Image::sample(double x, double y, int c, float outside) const {
  if (!(x >= 0.0 && y >= 0.0 && x <= width_ - 1 && y <= height_ - 1)) return outside;
  return sample_clamped(x, y, c);
}

float Image::sample_clamped(double x, double y, int c) const {
  x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
  y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double ax = x - x0;
  const double ay = y - y0;
  const double top = (1.0 - ax) * at(x0, y0, c) + ax * at(x1, y0, c);
  const double bottom = (1.0 - ax) * at(x0, y1, c) + ax * at(x1, y1, c);
  return static_cast<float>((1.0 - ay) * top + ay * bottom);
}

Image gaussian_blur(const Image& image, double sigma) {
  if (sigma <= 0.0) return image;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = static_cast<float>(std::exp(-0.5 * i * i / (sigma * sigma)));
    sum += kernel[i + radius];
  }
  for (float& k : kernel) k = static_cast<float>(k / sum);

  const int w = image.width();
  const int h = image.height();
  const int ch = image.channels();
  Image tmp(w, h, ch);
  Image out(w, h, ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        float acc = 0.0f;
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[i + radius] * image.at(std::clamp(x + i, 0, w - 1), y, c);
        }
        tmp.at(x, y, c) = acc;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        float acc = 0.0f;
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[i + radius] * tmp.at(x, std::clamp(y + i, 0, h - 1), c);
        }
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

}  // namespace svo
