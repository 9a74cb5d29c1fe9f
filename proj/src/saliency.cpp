#include "svo/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "svo/error.hpp"
#include "svo/random.hpp"

namespace svo {

ScoreMap salient_score_map(const FeatureMap& features) {
  const int h = features.height();
  const int w = features.width();
  const int channels = features.channels();
  if (h < 3 || w < 3 || channels < 1) {
    throw Error(ErrorCode::kInvalidArgument, "score map needs H >= 3, W >= 3, C >= 1");
  }
  for (float v : features.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteFeature, "feature map holds NaN/Inf");
  }

  ScoreMap out{h, w, std::vector<double>(static_cast<std::size_t>(h) * w, 0.0)};
  for (int m = 0; m < h; ++m) {
    const int m_lo = std::max(0, m - 1);
    const int m_hi = std::min(h - 1, m + 1);
    for (int n = 0; n < w; ++n) {
      const int n_lo = std::max(0, n - 1);
      const int n_hi = std::min(w - 1, n + 1);
      const auto cell = features.cell(m, n);
      const double channel_max = *std::max_element(cell.begin(), cell.end());

      double best = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < channels; ++c) {
        // Softmax over the neighbourhood, shifted by its maximum for stability.
        double shift = -std::numeric_limits<double>::infinity();
        for (int mm = m_lo; mm <= m_hi; ++mm) {
          for (int nn = n_lo; nn <= n_hi; ++nn) shift = std::max(shift, double(features.at(mm, nn, c)));
        }
        double denom = 0.0;
        for (int mm = m_lo; mm <= m_hi; ++mm) {
          for (int nn = n_lo; nn <= n_hi; ++nn) denom += std::exp(features.at(mm, nn, c) - shift);
        }
        const double value = cell[c];
        const double alpha = std::exp(value - shift) / denom;
        double beta;
        if (channel_max != 0.0) {
          beta = value / channel_max;
        } else {
          beta = value == 0.0 ? 1.0 : 0.0;
        }
        best = std::max(best, alpha * beta);
      }
      out.at(m, n) = best;
    }
  }
  return out;
}

namespace {

bool ranks_before(const ScoredCenter& a, const ScoredCenter& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.y != b.y) return a.y < b.y;
  return a.x < b.x;
}

}  // namespace

SalientSelection select_salient_patches(const ScoreMap& scores, int k, int grid, int nms_radius,
                                        int border) {
  if (k < 1 || grid < 1 || nms_radius < 0 || border < 0) {
    throw Error(ErrorCode::kInvalidArgument, "selection needs k >= 1, grid >= 1");
  }
  const int h = scores.height;
  const int w = scores.width;

  std::vector<ScoredCenter> candidates;
  for (int gy = 0; gy < h; gy += grid) {
    for (int gx = 0; gx < w; gx += grid) {
      bool found = false;
      ScoredCenter best;
      for (int y = std::max(gy, border); y < std::min(gy + grid, h - border); ++y) {
        for (int x = std::max(gx, border); x < std::min(gx + grid, w - border); ++x) {
          const double s = scores.at(y, x);
          if (!found || s > best.score) {
            best = {x, y, s};
            found = true;
          }
        }
      }
      if (found) candidates.push_back(best);
    }
  }
  std::sort(candidates.begin(), candidates.end(), ranks_before);

  SalientSelection out;
  for (const ScoredCenter& c : candidates) {
    const bool suppressed = std::any_of(out.centers.begin(), out.centers.end(), [&](const ScoredCenter& kept) {
      return std::max(std::abs(kept.x - c.x), std::abs(kept.y - c.y)) <= nms_radius;
    });
    if (suppressed) continue;
    out.centers.push_back(c);
    if (static_cast<int>(out.centers.size()) == k) break;
  }
  out.shortfall = static_cast<int>(out.centers.size()) < k;
  return out;
}

std::string_view label_name(PatchLabel label) {
  return label == PatchLabel::kSalient ? "salient" : "random";
}

std::size_t PatchSet::count(PatchLabel label) const {
  return static_cast<std::size_t>(std::count_if(
      centers.begin(), centers.end(), [label](const PatchCenter& c) { return c.label == label; }));
}

PatchSet build_patch_set(const std::vector<ScoredCenter>& salient_pool, int n_salient,
                         int n_random, std::uint64_t seed, int width, int height, int border) {
  if (n_salient < 0 || n_random < 0) {
    throw Error(ErrorCode::kInvalidArgument, "patch counts must be non-negative");
  }
  if (n_salient > 0 && salient_pool.empty()) {
    throw Error(ErrorCode::kEmptyPool, "no salient candidates to draw from");
  }
  if (n_salient > static_cast<int>(salient_pool.size())) {
    throw Error(ErrorCode::kInsufficientCandidates,
                "pool holds " + std::to_string(salient_pool.size()) + " centers, " +
                    std::to_string(n_salient) + " requested");
  }
  if (n_random > 0 && (width - 2 * border < 1 || height - 2 * border < 1)) {
    throw Error(ErrorCode::kInvalidArgument, "image has no interior pixels for random patches");
  }

  Rng rng(seed);
  PatchSet set;
  set.centers.reserve(static_cast<std::size_t>(n_salient + n_random));

  // Partial Fisher-Yates over pool indices.
  std::vector<std::size_t> order(salient_pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int i = 0; i < n_salient; ++i) {
    const std::size_t j = i + rng.uniform_index(order.size() - i);
    std::swap(order[i], order[j]);
    const ScoredCenter& c = salient_pool[order[i]];
    set.centers.push_back({c.x, c.y, PatchLabel::kSalient});
  }
  for (int i = 0; i < n_random; ++i) {
    const int x = rng.uniform_int(border, width - border - 1);
    const int y = rng.uniform_int(border, height - border - 1);
    set.centers.push_back({x, y, PatchLabel::kRandom});
  }
  return set;
}

}  // namespace svo
