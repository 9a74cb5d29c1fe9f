#include "svo/homography.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>

#include <Eigen/LU>

#include "svo/error.hpp"
#include "svo/random.hpp"

namespace svo {

Vec2 apply_homography(const Homography& h, const Vec2& p) {
  const Vec3 q = h * Vec3(p.x(), p.y(), 1.0);
  return Vec2(q.x() / q.z(), q.y() / q.z());
}

Homography homography_from_points(const std::vector<Vec2>& src, const std::vector<Vec2>& dst) {
  if (src.size() != 4 || dst.size() != 4) {
    throw Error(ErrorCode::kInvalidArgument, "four point pairs required");
  }
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const double x = src[i].x(), y = src[i].y();
    const double u = dst[i].x(), v = dst[i].y();
    a.row(2 * i) << x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y;
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y;
    b(2 * i) = u;
    b(2 * i + 1) = v;
  }
  const Eigen::Matrix<double, 8, 1> h = a.fullPivLu().solve(b);
  Homography out;
  out << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
  return out;
}

namespace {

bool convex_quad(const std::vector<Vec2>& pts) {
  int sign = 0;
  for (int i = 0; i < 4; ++i) {
    const Vec2 e1 = pts[(i + 1) % 4] - pts[i];
    const Vec2 e2 = pts[(i + 2) % 4] - pts[(i + 1) % 4];
    const double cross = e1.x() * e2.y() - e1.y() * e2.x();
    if (std::abs(cross) < 1e-9) return false;
    const int s = cross > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign) return false;
  }
  return true;
}

}  // namespace

Homography sample_homography(int t, const HomographySchedule& schedule, int width, int height,
                             std::uint64_t seed) {
  if (t < 1 || schedule.length < 1) {
    throw Error(ErrorCode::kInvalidArgument, "homography index and length must be >= 1");
  }
  const double g = static_cast<double>(t) / schedule.length;
  const double extent = std::min(width, height);
  const Vec2 centre(0.5 * (width - 1), 0.5 * (height - 1));
  const std::vector<Vec2> corners = {
      {0.0, 0.0}, {width - 1.0, 0.0}, {width - 1.0, height - 1.0}, {0.0, height - 1.0}};

  Rng rng(seed);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double s = 1.0 + rng.uniform(-1.0, 1.0) * schedule.scale * g;
    const double angle = rng.uniform(-1.0, 1.0) * schedule.rotation * g;
    const double tx = rng.uniform(-1.0, 1.0) * schedule.translation * extent * g;
    const double ty = rng.uniform(-1.0, 1.0) * schedule.translation * extent * g;
    std::vector<Vec2> jitter(4);
    for (Vec2& j : jitter) {
      const double jx = rng.uniform(-1.0, 1.0);
      const double jy = rng.uniform(-1.0, 1.0);
      j = Vec2(jx, jy) * schedule.perspective * extent * g;
    }

    // Similarity about the image centre.
    const double c = std::cos(angle), sn = std::sin(angle);
    Homography affine;
    affine << s * c, -s * sn, 0.0,
              s * sn, s * c, 0.0,
              0.0, 0.0, 1.0;
    const Vec2 shift = centre + Vec2(tx, ty) - affine.topLeftCorner<2, 2>() * centre;
    affine(0, 2) = shift.x();
    affine(1, 2) = shift.y();

    Homography h = affine;
    std::vector<Vec2> moved(4);
    for (int i = 0; i < 4; ++i) moved[i] = apply_homography(affine, corners[i]);
    if (schedule.perspective > 0.0) {
      std::vector<Vec2> jittered(4);
      for (int i = 0; i < 4; ++i) jittered[i] = moved[i] + jitter[i];
      if (!convex_quad(jittered)) continue;
      h = homography_from_points(moved, jittered) * affine;
      moved = jittered;
    }
    if (!convex_quad(moved) || std::abs(h.determinant()) <= 1e-9) continue;
    return h / h(2, 2);
  }
  throw Error(ErrorCode::kDegenerateHomography,
              "no convex corner configuration after 10 draws (t=" + std::to_string(t) + ")");
}

std::size_t OcclusionRegion::area() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

double OcclusionRegion::fraction() const {
  return mask_.empty() ? 0.0 : static_cast<double>(area()) / mask_.size();
}

bool OcclusionRegion::is_4_connected() const {
  const auto first = std::find(mask_.begin(), mask_.end(), std::uint8_t{1});
  if (first == mask_.end()) return false;
  std::vector<std::uint8_t> seen(mask_.size(), 0);
  std::deque<std::size_t> queue{static_cast<std::size_t>(first - mask_.begin())};
  seen[queue.front()] = 1;
  std::size_t reached = 0;
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    ++reached;
    const int x = static_cast<int>(i % width_);
    const int y = static_cast<int>(i / width_);
    const int nx[4] = {x - 1, x + 1, x, x};
    const int ny[4] = {y, y, y - 1, y + 1};
    for (int k = 0; k < 4; ++k) {
      if (!contains(nx[k], ny[k])) continue;
      const std::size_t j = index(nx[k], ny[k]);
      if (!seen[j]) {
        seen[j] = 1;
        queue.push_back(j);
      }
    }
  }
  return reached == area();
}

namespace {

// Raster-scan relabelling into 4-connected segments; fragments smaller than
// min_size merge into the segment adjacent to their first pixel.
Superpixels enforce_connectivity(const std::vector<int>& raw, int width, int height, int min_size) {
  Superpixels out;
  out.width = width;
  out.height = height;
  out.labels.assign(raw.size(), -1);
  const int dx[4] = {-1, 0, 1, 0};
  const int dy[4] = {0, -1, 0, 1};
  int next = 0;
  std::vector<std::size_t> members;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t start = static_cast<std::size_t>(y) * width + x;
      if (out.labels[start] >= 0) continue;
      int adjacent = -1;
      for (int k = 0; k < 4; ++k) {
        const int ax = x + dx[k], ay = y + dy[k];
        if (ax < 0 || ay < 0 || ax >= width || ay >= height) continue;
        const int l = out.labels[static_cast<std::size_t>(ay) * width + ax];
        if (l >= 0) {
          adjacent = l;
          break;
        }
      }
      members.clear();
      members.push_back(start);
      out.labels[start] = next;
      for (std::size_t head = 0; head < members.size(); ++head) {
        const int mx = static_cast<int>(members[head] % width);
        const int my = static_cast<int>(members[head] / width);
        for (int k = 0; k < 4; ++k) {
          const int nx = mx + dx[k], ny = my + dy[k];
          if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * width + nx;
          if (out.labels[j] < 0 && raw[j] == raw[start]) {
            out.labels[j] = next;
            members.push_back(j);
          }
        }
      }
      if (static_cast<int>(members.size()) < min_size && adjacent >= 0) {
        for (std::size_t m : members) out.labels[m] = adjacent;
      } else {
        ++next;
      }
    }
  }
  out.count = next;
  return out;
}

}  // namespace

Superpixels slic_superpixels(const Image& image, int count, double compactness, int iterations) {
  const Image gray = image.to_gray();
  const int w = gray.width();
  const int h = gray.height();
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "superpixel count must be >= 1");

  const double step = std::sqrt(static_cast<double>(w) * h / count);
  const int nx = std::max(1, static_cast<int>(std::lround(w / step)));
  const int ny = std::max(1, static_cast<int>(std::lround(h / step)));
  const double step_x = static_cast<double>(w) / nx;
  const double step_y = static_cast<double>(h) / ny;

  struct Centre {
    double x, y, intensity;
  };
  std::vector<Centre> centres;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double cx = (i + 0.5) * step_x - 0.5;
      const double cy = (j + 0.5) * step_y - 0.5;
      centres.push_back({cx, cy, gray.at(static_cast<int>(std::lround(cx)), static_cast<int>(std::lround(cy)))});
    }
  }

  const double spatial_weight = compactness * compactness / (step * step);
  const int search = static_cast<int>(std::ceil(2.0 * std::max(step_x, step_y)));
  std::vector<int> labels(static_cast<std::size_t>(w) * h, 0);
  std::vector<double> best(labels.size());
  for (int iter = 0; iter < std::max(1, iterations); ++iter) {
    std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < centres.size(); ++k) {
      const Centre& c = centres[k];
      const int x0 = std::max(0, static_cast<int>(std::floor(c.x)) - search);
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(c.x)) + search);
      const int y0 = std::max(0, static_cast<int>(std::floor(c.y)) - search);
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(c.y)) + search);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double di = gray.at(x, y) - c.intensity;
          const double ds = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
          const double d = di * di + ds * spatial_weight;
          const std::size_t idx = static_cast<std::size_t>(y) * w + x;
          if (d < best[idx]) {
            best[idx] = d;
            labels[idx] = static_cast<int>(k);
          }
        }
      }
    }
    std::vector<double> sx(centres.size(), 0.0), sy(centres.size(), 0.0), si(centres.size(), 0.0);
    std::vector<int> n(centres.size(), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int l = labels[static_cast<std::size_t>(y) * w + x];
        sx[l] += x;
        sy[l] += y;
        si[l] += gray.at(x, y);
        ++n[l];
      }
    }
    for (std::size_t k = 0; k < centres.size(); ++k) {
      if (n[k] == 0) continue;
      centres[k] = {sx[k] / n[k], sy[k] / n[k], si[k] / n[k]};
    }
  }
  const int min_size = std::max(1, static_cast<int>(step_x * step_y / 4.0));
  return enforce_connectivity(labels, w, h, min_size);
}

OcclusionRegion superpixel_occlusion(const Image& image, std::uint64_t seed,
                                     const OcclusionConfig& config) {
  if (image.width() < 32 || image.height() < 32) {
    throw Error(ErrorCode::kImageTooSmall, "occlusion masks need images of at least 32x32");
  }
  const Superpixels sp =
      slic_superpixels(image, config.superpixels, config.compactness, config.iterations);

  std::vector<std::set<int>> adjacency(sp.count);
  std::vector<std::size_t> sizes(sp.count, 0);
  for (int y = 0; y < sp.height; ++y) {
    for (int x = 0; x < sp.width; ++x) {
      const int l = sp.at(x, y);
      ++sizes[l];
      if (x + 1 < sp.width && sp.at(x + 1, y) != l) {
        adjacency[l].insert(sp.at(x + 1, y));
        adjacency[sp.at(x + 1, y)].insert(l);
      }
      if (y + 1 < sp.height && sp.at(x, y + 1) != l) {
        adjacency[l].insert(sp.at(x, y + 1));
        adjacency[sp.at(x, y + 1)].insert(l);
      }
    }
  }
  const double total = static_cast<double>(sp.labels.size());

  Rng rng(seed);
  std::vector<int> best_union;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < 50; ++attempt) {
    const int target = rng.uniform_int(1, std::max(1, config.max_segments));
    std::vector<int> chosen{static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(sp.count)))};
    while (static_cast<int>(chosen.size()) < target) {
      std::set<int> frontier;
      for (int c : chosen) {
        for (int a : adjacency[c]) {
          if (std::find(chosen.begin(), chosen.end(), a) == chosen.end()) frontier.insert(a);
        }
      }
      if (frontier.empty()) break;
      auto it = frontier.begin();
      std::advance(it, static_cast<long>(rng.uniform_index(frontier.size())));
      chosen.push_back(*it);
    }
    std::size_t area = 0;
    for (int c : chosen) area += sizes[c];
    const double frac = area / total;
    const double gap = frac < config.min_fraction   ? config.min_fraction - frac
                       : frac > config.max_fraction ? frac - config.max_fraction
                                                    : 0.0;
    if (gap < best_gap) {
      best_gap = gap;
      best_union = chosen;
    }
    if (gap == 0.0) break;
  }

  OcclusionRegion region(sp.width, sp.height);
  for (int y = 0; y < sp.height; ++y) {
    for (int x = 0; x < sp.width; ++x) {
      if (std::find(best_union.begin(), best_union.end(), sp.at(x, y)) != best_union.end()) {
        region.set(x, y, true);
      }
    }
  }
  return region;
}

Image motion_blur(const Image& image, int length, double angle) {
  if (length <= 1) return image;
  const double ux = std::cos(angle);
  const double uy = std::sin(angle);
  Image out(image.width(), image.height(), image.channels());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < image.channels(); ++c) {
        double acc = 0.0;
        for (int i = 0; i < length; ++i) {
          const double offset = i - 0.5 * (length - 1);
          acc += image.sample_clamped(x + offset * ux, y + offset * uy, c);
        }
        out.at(x, y, c) = static_cast<float>(acc / length);
      }
    }
  }
  return out;
}

namespace {

void clamp_intensities(Image& img) {
  for (float& v : img.data()) v = std::clamp(v, 0.0f, 255.0f);
}

}  // namespace

AugmentedImage apply_augmentations(const Image& image, int t, const AugmentationConfig& config,
                                   std::uint64_t seed) {
  AugmentedImage out{image, OcclusionRegion(image.width(), image.height()), {}};
  Image& img = out.image;
  AugmentationDescriptor& d = out.descriptor;
  const int w = img.width();
  const int h = img.height();

  Rng illum(derive_seed(seed, static_cast<std::uint64_t>(t), 1));
  d.gain = 1.0 + illum.uniform(-1.0, 1.0) * config.gain;
  d.gain_x = illum.uniform(-1.0, 1.0) * config.gain_gradient;
  d.gain_y = illum.uniform(-1.0, 1.0) * config.gain_gradient;
  d.bias = illum.uniform(-1.0, 1.0) * config.bias;
  if (config.gain != 0.0 || config.gain_gradient != 0.0 || config.bias != 0.0) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double rx = w > 1 ? static_cast<double>(x) / (w - 1) - 0.5 : 0.0;
        const double ry = h > 1 ? static_cast<double>(y) / (h - 1) - 0.5 : 0.0;
        const double gain = d.gain + d.gain_x * rx + d.gain_y * ry;
        for (int c = 0; c < img.channels(); ++c) {
          img.at(x, y, c) = static_cast<float>(gain * img.at(x, y, c) + d.bias);
        }
      }
    }
    clamp_intensities(img);
  }

  Rng colour(derive_seed(seed, static_cast<std::uint64_t>(t), 2));
  d.saturation = colour.uniform(-1.0, 1.0) * config.saturation;
  d.hue = colour.uniform(-1.0, 1.0) * config.hue;
  if (img.channels() == 3 && (config.saturation != 0.0 || config.hue != 0.0)) {
    // Rotate and scale chroma in YIQ space.
    const double ch = std::cos(d.hue), sh = std::sin(d.hue);
    const double k = 1.0 + d.saturation;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double r = img.at(x, y, 0), g = img.at(x, y, 1), b = img.at(x, y, 2);
        const double yy = 0.299 * r + 0.587 * g + 0.114 * b;
        const double ii = 0.596 * r - 0.274 * g - 0.322 * b;
        const double qq = 0.211 * r - 0.523 * g + 0.312 * b;
        const double i2 = k * (ch * ii - sh * qq);
        const double q2 = k * (sh * ii + ch * qq);
        img.at(x, y, 0) = static_cast<float>(yy + 0.956 * i2 + 0.621 * q2);
        img.at(x, y, 1) = static_cast<float>(yy - 0.272 * i2 - 0.647 * q2);
        img.at(x, y, 2) = static_cast<float>(yy - 1.106 * i2 + 1.703 * q2);
      }
    }
    clamp_intensities(img);
  }

  Rng blur(derive_seed(seed, static_cast<std::uint64_t>(t), 3));
  d.blur_length = config.max_blur_length > 0 ? blur.uniform_int(0, config.max_blur_length) : 0;
  d.blur_angle = blur.uniform(0.0, M_PI);
  if (d.blur_length > 1) img = motion_blur(img, d.blur_length, d.blur_angle);

  if (config.occlusion.enabled) {
    out.region = superpixel_occlusion(image, derive_seed(seed, static_cast<std::uint64_t>(t), 4),
                                      config.occlusion);
    Rng paint(derive_seed(seed, static_cast<std::uint64_t>(t), 5));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!out.region.contains(x, y)) continue;
        for (int c = 0; c < img.channels(); ++c) {
          img.at(x, y, c) = static_cast<float>(paint.uniform(0.0, 255.0));
        }
      }
    }
    d.occlusion_fraction = out.region.fraction();
  }
  return out;
}

Image warp_image(const Image& image, const Homography& h) {
  const Homography inv = h.inverse();
  Image out(image.width(), image.height(), image.channels());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const Vec2 src = apply_homography(inv, Vec2(x, y));
      for (int c = 0; c < image.channels(); ++c) {
        out.at(x, y, c) = image.sample(src.x(), src.y(), c, 0.0f);
      }
    }
  }
  return out;
}

HomographySequence generate_sequence(const Image& base, int length, const SequenceConfig& config,
                                     std::uint64_t seed) {
  if (length < 1) throw Error(ErrorCode::kInvalidArgument, "sequence length must be >= 1");
  HomographySchedule schedule = config.schedule;
  schedule.length = length;

  HomographySequence seq;
  seq.base = base;
  for (int t = 1; t <= length; ++t) {
    const std::uint64_t frame_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
    const Homography h =
        sample_homography(t, schedule, base.width(), base.height(), derive_seed(frame_seed, 1));
    AugmentedImage aug = apply_augmentations(base, t, config.augmentation, derive_seed(frame_seed, 2));

    const Homography inv = h.inverse();
    OcclusionRegion frame_mask(base.width(), base.height());
    if (!aug.region.empty()) {
      for (int y = 0; y < base.height(); ++y) {
        for (int x = 0; x < base.width(); ++x) {
          const Vec2 src = apply_homography(inv, Vec2(x, y));
          if (aug.region.contains(static_cast<int>(std::lround(src.x())),
                                  static_cast<int>(std::lround(src.y())))) {
            frame_mask.set(x, y, true);
          }
        }
      }
    }

    seq.frames.push_back(warp_image(aug.image, h));
    seq.augmented.push_back(std::move(aug.image));
    seq.homographies.push_back(h);
    seq.occlusions.push_back(std::move(frame_mask));
    seq.descriptors.push_back(aug.descriptor);
  }
  return seq;
}

std::size_t VisibilityMask::visible_count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

Correspondences gt_correspondence(const HomographySequence& seq, const std::vector<Vec2>& points) {
  const int w = seq.base.width();
  const int h = seq.base.height();
  for (const Vec2& p : points) {
    if (!(p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= w - 1 && p.y() <= h - 1)) {
      throw Error(ErrorCode::kOutOfBounds, "correspondence point outside the base image");
    }
  }
  Correspondences out;
  out.visibility = VisibilityMask(seq.length(), static_cast<int>(points.size()));
  for (int t = 0; t < seq.length(); ++t) {
    std::vector<Vec2> mapped;
    mapped.reserve(points.size());
    for (std::size_t l = 0; l < points.size(); ++l) {
      const Vec2 q = apply_homography(seq.homographies[t], points[l]);
      const bool inside = q.x() >= 0.0 && q.y() >= 0.0 && q.x() <= w - 1 && q.y() <= h - 1;
      const bool occluded = inside && seq.occlusions[t].contains(static_cast<int>(std::lround(q.x())),
                                                                 static_cast<int>(std::lround(q.y())));
      out.visibility.set(t, static_cast<int>(l), inside && !occluded);
      mapped.push_back(q);
    }
    out.positions.push_back(std::move(mapped));
  }
  return out;
}

std::vector<Vec2> perturb_initial_positions(const std::vector<Vec2>& targets, double max_offset,
                                            std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec2> out;
  out.reserve(targets.size());
  for (const Vec2& p : targets) {
    const double dx = rng.uniform(-max_offset, max_offset);
    const double dy = rng.uniform(-max_offset, max_offset);
    out.push_back(p + Vec2(dx, dy));
  }
  return out;
}

}  // namespace svo
