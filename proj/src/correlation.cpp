#include "svo/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "svo/error.hpp"
#include "svo/random.hpp"

namespace svo {

FeatureMap::FeatureMap(int height, int width, int channels, int stride, float fill)
    : height_(height), width_(width), channels_(channels), stride_(stride),
      data_(static_cast<std::size_t>(height) * width * channels, fill) {
  if (height < 0 || width < 0 || channels < 1 || stride < 1) {
    throw Error(ErrorCode::kInvalidArgument, "feature map needs channels >= 1 and stride >= 1");
  }
}

namespace {

struct Gradients {
  Image dx;
  Image dy;
};

Gradients central_differences(const Image& img) {
  const int w = img.width();
  const int h = img.height();
  Gradients g{Image(w, h), Image(w, h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      g.dx.at(x, y) = 0.5f * (img.at(std::min(x + 1, w - 1), y) - img.at(std::max(x - 1, 0), y));
      g.dy.at(x, y) = 0.5f * (img.at(x, std::min(y + 1, h - 1)) - img.at(x, std::max(y - 1, 0)));
    }
  }
  return g;
}

Image local_variance(const Image& img, int radius) {
  const int w = img.width();
  const int h = img.height();
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      double sum_sq = 0.0;
      int count = 0;
      for (int v = std::max(0, y - radius); v <= std::min(h - 1, y + radius); ++v) {
        for (int u = std::max(0, x - radius); u <= std::min(w - 1, x + radius); ++u) {
          const double value = img.at(u, v);
          sum += value;
          sum_sq += value * value;
          ++count;
        }
      }
      const double mean = sum / count;
      out.at(x, y) = static_cast<float>(std::max(0.0, sum_sq / count - mean * mean));
    }
  }
  return out;
}

}  // namespace

FeatureMap extract_features(const Image& image, const FeatureConfig& config) {
  if (image.width() < 16 || image.height() < 16) {
    throw Error(ErrorCode::kImageTooSmall, "feature extraction needs at least 16x16 pixels, got " +
                                               std::to_string(image.width()) + "x" +
                                               std::to_string(image.height()));
  }
  if (config.stride != 1 && config.stride != 4) {
    throw Error(ErrorCode::kInvalidArgument, "feature stride must be 1 or 4");
  }
  const Image gray = image.to_gray();
  const Image fine = gaussian_blur(gray, config.fine_sigma);
  const Image coarse = gaussian_blur(gray, config.coarse_sigma);
  const Gradients g_fine = central_differences(fine);
  const Gradients g_coarse = central_differences(coarse);
  const Image variance = local_variance(fine, config.variance_radius);

  const int s = config.stride;
  const int fh = (gray.height() - 1) / s + 1;
  const int fw = (gray.width() - 1) / s + 1;
  FeatureMap map(fh, fw, kFeatureChannels, s);
  for (int m = 0; m < fh; ++m) {
    for (int n = 0; n < fw; ++n) {
      const int x = n * s;
      const int y = m * s;
      const float gx = g_fine.dx.at(x, y);
      const float gy = g_fine.dy.at(x, y);
      const float cx = g_coarse.dx.at(x, y);
      const float cy = g_coarse.dy.at(x, y);
      map.at(m, n, 0) = fine.at(x, y);
      map.at(m, n, 1) = std::abs(gx);
      map.at(m, n, 2) = std::abs(gy);
      map.at(m, n, 3) = std::sqrt(gx * gx + gy * gy);
      map.at(m, n, 4) = std::sqrt(cx * cx + cy * cy);
      map.at(m, n, 5) = variance.at(x, y);
    }
  }

  for (int c = 0; c < kFeatureChannels; ++c) {
    float lo = std::numeric_limits<float>::max();
    float hi = std::numeric_limits<float>::lowest();
    for (int m = 0; m < fh; ++m) {
      for (int n = 0; n < fw; ++n) {
        lo = std::min(lo, map.at(m, n, c));
        hi = std::max(hi, map.at(m, n, c));
      }
    }
    const float range = hi - lo;
    for (int m = 0; m < fh; ++m) {
      for (int n = 0; n < fw; ++n) {
        float& v = map.at(m, n, c);
        v = range > 0.0f ? std::clamp((v - lo) / range, 0.0f, 1.0f) : 0.0f;
      }
    }
  }
  return map;
}

bool lookup(const FeatureMap& map, const Vec2& pixel, std::span<float> out) {
  const int channels = map.channels();
  const double u = pixel.x() / map.stride();
  const double v = pixel.y() / map.stride();
  if (!(u >= 0.0 && v >= 0.0 && u <= map.width() - 1 && v <= map.height() - 1)) {
    std::fill(out.begin(), out.begin() + channels, 0.0f);
    return false;
  }
  const int n0 = static_cast<int>(std::floor(u));
  const int m0 = static_cast<int>(std::floor(v));
  const int n1 = std::min(n0 + 1, map.width() - 1);
  const int m1 = std::min(m0 + 1, map.height() - 1);
  const double a = u - n0;
  const double b = v - m0;
  const double w00 = (1.0 - a) * (1.0 - b);
  const double w01 = a * (1.0 - b);
  const double w10 = (1.0 - a) * b;
  const double w11 = a * b;
  const auto c00 = map.cell(m0, n0);
  const auto c01 = map.cell(m0, n1);
  const auto c10 = map.cell(m1, n0);
  const auto c11 = map.cell(m1, n1);
  for (int c = 0; c < channels; ++c) {
    out[c] = static_cast<float>(w00 * c00[c] + w01 * c01[c] + w10 * c10[c] + w11 * c11[c]);
  }
  return true;
}

bool CorrelationMap::any_valid() const {
  return std::any_of(valid.begin(), valid.end(), [](std::uint8_t v) { return v != 0; });
}

CorrelationMap correlation_map(const FeatureMap& source, const Patch& patch,
                               const FeatureMap& target, std::span<const Vec2> reprojected,
                               int side) {
  if (side < 1 || side % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "correlation grid side must be odd");
  }
  if (source.channels() != target.channels()) {
    throw Error(ErrorCode::kDimensionMismatch, "source and target channel counts differ");
  }
  const std::vector<Vec2> pixels = patch.pixels();
  if (reprojected.size() != pixels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "reprojection does not match patch size");
  }

  const int channels = source.channels();
  const int half = side / 2;
  CorrelationMap corr;
  corr.patch_pixels = static_cast<int>(pixels.size());
  corr.side = side;
  corr.values.assign(pixels.size() * side * side, 0.0);
  corr.valid.assign(pixels.size() * side * side, 0);

  std::vector<float> f_src(channels);
  std::vector<float> f_tgt(channels);
  std::vector<double> cell_dot(static_cast<std::size_t>(side + 1) * (side + 1));
  for (std::size_t p = 0; p < pixels.size(); ++p) {
    if (!lookup(source, pixels[p], f_src)) {
      throw Error(ErrorCode::kOutOfBounds, "source patch pixel outside the feature map");
    }
    // Integer offsets keep the bilinear weights fixed at stride 1, so the
    // grid of cell dot products can be blended instead of re-interpolating.
    const double u = reprojected[p].x();
    const double v = reprojected[p].y();
    if (target.stride() == 1 && u - half >= 0.0 && v - half >= 0.0 &&
        u + half + 1.0 <= target.width() - 1 && v + half + 1.0 <= target.height() - 1) {
      const int n0 = static_cast<int>(std::floor(u)) - half;
      const int m0 = static_cast<int>(std::floor(v)) - half;
      const double a = u - std::floor(u);
      const double b = v - std::floor(v);
      for (int i = 0; i <= side; ++i) {
        for (int j = 0; j <= side; ++j) {
          const auto cell = target.cell(m0 + i, n0 + j);
          double dot = 0.0;
          for (int c = 0; c < channels; ++c) dot += static_cast<double>(f_src[c]) * cell[c];
          cell_dot[static_cast<std::size_t>(i) * (side + 1) + j] = dot;
        }
      }
      for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j) {
          const double* row0 = &cell_dot[static_cast<std::size_t>(i) * (side + 1) + j];
          const double* row1 = row0 + side + 1;
          const std::size_t idx = (p * side + i) * side + j;
          corr.values[idx] = (1.0 - b) * ((1.0 - a) * row0[0] + a * row0[1]) +
                             b * ((1.0 - a) * row1[0] + a * row1[1]);
          corr.valid[idx] = 1;
        }
      }
      continue;
    }
    for (int dy = -half; dy <= half; ++dy) {
      for (int dx = -half; dx <= half; ++dx) {
        const std::size_t idx = (p * side + (dy + half)) * side + (dx + half);
        if (!lookup(target, reprojected[p] + Vec2(dx, dy), f_tgt)) continue;
        double dot = 0.0;
        for (int c = 0; c < channels; ++c) dot += static_cast<double>(f_src[c]) * f_tgt[c];
        corr.values[idx] = dot;
        corr.valid[idx] = 1;
      }
    }
  }
  return corr;
}

TrackerResult argmax_flow(const CorrelationMap& corr) {
  const int s = corr.side;
  const int half = s / 2;
  std::vector<double> summed(static_cast<std::size_t>(s) * s, 0.0);
  for (int p = 0; p < corr.patch_pixels; ++p) {
    for (int i = 0; i < s * s; ++i) summed[i] += corr.values[static_cast<std::size_t>(p) * s * s + i];
  }
  auto value = [&](int row, int col) { return summed[static_cast<std::size_t>(row) * s + col]; };

  const auto [lo_it, hi_it] = std::minmax_element(summed.begin(), summed.end());
  TrackerResult result;
  if (*hi_it - *lo_it <= 1e-12 * std::max(1.0, std::abs(*hi_it))) {
    result.degenerate = true;
    result.update.delta = Vec2::Zero();
    result.update.confidence = Vec2::Constant(kTrackerConfidenceFloor);
    return result;
  }

  // First maximum in row-major order.
  const int peak = static_cast<int>(std::distance(summed.begin(), hi_it));
  const int row = peak / s;
  const int col = peak % s;
  const double centre = value(row, col);

  auto refine = [](double left, double mid, double right) {
    const double denom = left - 2.0 * mid + right;
    if (!(denom < 0.0)) return 0.0;
    return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
  };
  double sub_x = 0.0;
  double sub_y = 0.0;
  if (col > 0 && col < s - 1) sub_x = refine(value(row, col - 1), centre, value(row, col + 1));
  if (row > 0 && row < s - 1) sub_y = refine(value(row - 1, col), centre, value(row + 1, col));

  double neighbour_sum = 0.0;
  int neighbours = 0;
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const int r = row + dr;
      const int c = col + dc;
      if (r < 0 || c < 0 || r >= s || c >= s) continue;
      neighbour_sum += value(r, c);
      ++neighbours;
    }
  }
  const double prominence =
      neighbours > 0 ? centre - neighbour_sum / neighbours : kTrackerConfidenceFloor;

  result.update.delta = Vec2(col - half + sub_x, row - half + sub_y);
  result.update.confidence = Vec2::Constant(std::max(prominence, kTrackerConfidenceFloor));
  return result;
}

FlowUpdate oracle_flow(const std::optional<OracleTarget>& truth, const Vec2& current,
                       double noise_sigma, std::uint64_t seed) {
  FlowUpdate out;
  if (!truth) {
    out.delta = Vec2::Zero();
    out.confidence = Vec2::Constant(kOracleHiddenConfidence);
    return out;
  }
  out.delta = truth->position - current;
  if (noise_sigma > 0.0) {
    const auto [nx, ny] = normal_pair(seed);
    out.delta += noise_sigma * Vec2(nx, ny);
  }
  out.confidence = truth->visible
                       ? Vec2::Constant(1.0 / (noise_sigma * noise_sigma + 1e-6))
                       : Vec2::Constant(kOracleHiddenConfidence);
  return out;
}

FlowUpdate TrackerFlowProvider::estimate(const EdgeQuery&, const CorrelationMap* corr) const {
  if (corr == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "tracker provider needs a correlation map");
  }
  return argmax_flow(*corr).update;
}

FlowUpdate OracleFlowProvider::estimate(const EdgeQuery& query, const CorrelationMap*) const {
  const std::size_t centre = query.reprojected.size() / 2;
  const Vec2 current = query.reprojected[centre];
  return oracle_flow(truth_.locate(query.source_frame, query.patch->center, query.target_frame),
                     current, noise_sigma_, query.seed);
}

}  // namespace svo
