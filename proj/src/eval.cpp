#include "gulm/eval.hpp"

#include <algorithm>
#include <cmath>

#include "gulm/errors.hpp"

namespace gulm {

FrameScore match_and_score(std::span<const MBLocation> estimates,
                           const GroundTruthScene& truth, double wavelength) {
  if (!(wavelength > 0.0))
    throw ValidationError("wavelength must be positive");
  truth.validate();

  const double gate = 0.25 * wavelength;
  struct Pair {
    double dist;
    int est;
    int tru;
  };
  std::vector<Pair> pairs;
  for (int e = 0; e < static_cast<int>(estimates.size()); ++e)
    for (int t = 0; t < static_cast<int>(truth.positions.size()); ++t) {
      const double d = distance(estimates[e].position, truth.positions[t]);
      if (d < gate) pairs.push_back({d, e, t});
    }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.est != b.est) return a.est < b.est;
    return a.tru < b.tru;
  });

  std::vector<char> est_used(estimates.size(), 0);
  std::vector<char> tru_used(truth.positions.size(), 0);
  double sq_sum = 0.0;
  int tp = 0;
  for (const Pair& p : pairs) {
    if (est_used[p.est] || tru_used[p.tru]) continue;
    est_used[p.est] = 1;
    tru_used[p.tru] = 1;
    sq_sum += p.dist * p.dist;
    ++tp;
  }

  FrameScore score;
  score.true_positives = tp;
  score.false_positives = static_cast<int>(estimates.size()) - tp;
  score.false_negatives = static_cast<int>(truth.positions.size()) - tp;
  score.rmse = tp > 0 ? std::sqrt(sq_sum / tp) : 0.0;
  return score;
}

double jaccard(std::span<const FrameScore> scores) {
  if (scores.empty()) throw ValidationError("jaccard needs at least one frame");
  long tp = 0, fp = 0, fn = 0;
  for (const FrameScore& s : scores) {
    tp += s.true_positives;
    fp += s.false_positives;
    fn += s.false_negatives;
  }
  const long denom = tp + fp + fn;
  if (denom == 0)
    throw UndefinedMetricError("jaccard undefined: no detections or truth");
  return 100.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

RmseSummary aggregate_rmse(std::span<const FrameScore> scores,
                           double wavelength) {
  if (!(wavelength > 0.0))
    throw ValidationError("wavelength must be positive");
  const double unit = wavelength / 10.0;
  std::vector<double> values;
  for (const FrameScore& s : scores)
    if (s.true_positives > 0) values.push_back(s.rmse / unit);
  if (values.empty())
    throw UndefinedMetricError("rmse undefined: no true positives in any frame");

  RmseSummary out;
  out.frames = static_cast<int>(values.size());
  for (double v : values) out.mean += v;
  out.mean /= values.size();
  double var = 0.0;
  for (double v : values) var += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(var / values.size());  // population std
  return out;
}

double DensityImage::total_mass() const {
  double m = 0.0;
  for (double c : counts) m += c;
  return m;
}

DensityImage render_density(std::span<const MBLocation> locations,
                            const GridSpec& grid) {
  if (!(grid.pixel_size > 0.0))
    throw ValidationError("pixel_size must be positive");
  if (grid.width < 1 || grid.height < 1)
    throw ValidationError("grid must have positive dimensions");

  DensityImage img;
  img.grid = grid;
  img.counts.assign(static_cast<size_t>(grid.width) * grid.height, 0.0);
  for (const MBLocation& loc : locations) {
    const int px = static_cast<int>(
        std::floor((loc.position.x - grid.origin.x) / grid.pixel_size));
    const int pz = static_cast<int>(
        std::floor((loc.position.z - grid.origin.z) / grid.pixel_size));
    if (px < 0 || px >= grid.width || pz < 0 || pz >= grid.height) continue;
    img.counts[static_cast<size_t>(pz) * grid.width + px] += 1.0;
  }
  return img;
}

double ssim(const DensityImage& a, const DensityImage& b) {
  if (a.grid.width != b.grid.width || a.grid.height != b.grid.height)
    throw ValidationError("ssim requires identical grids");
  const int w = a.grid.width, h = a.grid.height;

  // 11x11 Gaussian window, sigma 1.5, unit mass.
  constexpr int kRadius = 5;
  double window[2 * kRadius + 1];
  double wsum = 0.0;
  for (int i = -kRadius; i <= kRadius; ++i) {
    window[i + kRadius] = std::exp(-0.5 * i * i / (1.5 * 1.5));
    wsum += window[i + kRadius];
  }
  for (double& v : window) v /= wsum;

  double range = 0.0;
  for (double v : a.counts) range = std::max(range, v);
  for (double v : b.counts) range = std::max(range, v);
  if (range == 0.0) return 100.0;  // both images identically zero
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);

  auto blur = [&](const std::vector<double>& src) {
    std::vector<double> tmp(src.size()), dst(src.size());
    for (int z = 0; z < h; ++z)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -kRadius; i <= kRadius; ++i) {
          const int xi = std::clamp(x + i, 0, w - 1);
          acc += window[i + kRadius] * src[static_cast<size_t>(z) * w + xi];
        }
        tmp[static_cast<size_t>(z) * w + x] = acc;
      }
    for (int z = 0; z < h; ++z)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -kRadius; i <= kRadius; ++i) {
          const int zi = std::clamp(z + i, 0, h - 1);
          acc += window[i + kRadius] * tmp[static_cast<size_t>(zi) * w + x];
        }
        dst[static_cast<size_t>(z) * w + x] = acc;
      }
    return dst;
  };

  const size_t n = a.counts.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (size_t i = 0; i < n; ++i) {
    aa[i] = a.counts[i] * a.counts[i];
    bb[i] = b.counts[i] * b.counts[i];
    ab[i] = a.counts[i] * b.counts[i];
  }
  const auto mu_a = blur(a.counts);
  const auto mu_b = blur(b.counts);
  const auto m_aa = blur(aa);
  const auto m_bb = blur(bb);
  const auto m_ab = blur(ab);

  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double va = m_aa[i] - mu_a[i] * mu_a[i];
    const double vb = m_bb[i] - mu_b[i] * mu_b[i];
    const double cov = m_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
    acc += num / den;
  }
  return 100.0 * acc / static_cast<double>(n);
}

} // namespace gulm
