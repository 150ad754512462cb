#pragma once

#include <span>
#include <vector>

#include "gulm/cluster.hpp"
#include "gulm/types.hpp"

namespace gulm {

/// Per-frame detection counts with RMSE over the true positives.
struct FrameScore {
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  double rmse = 0.0;  // [m]; meaningful only when true_positives > 0
};

/// Greedy ascending-distance one-to-one matching with the quarter-wavelength
/// acceptance gate.
FrameScore match_and_score(std::span<const MBLocation> estimates,
                           const GroundTruthScene& truth, double wavelength);

/// 100 * TP / (TP + FP + FN) pooled over frames.
double jaccard(std::span<const FrameScore> scores);

struct RmseSummary {
  double mean = 0.0;    // [lambda/10]
  double stddev = 0.0;  // population std over frames [lambda/10]
  int frames = 0;       // frames with at least one TP
};

/// Per-frame RMSE in lambda/10 units, mean and population std across frames.
RmseSummary aggregate_rmse(std::span<const FrameScore> scores,
                           double wavelength);

struct GridSpec {
  Vec2 origin;              // [m] lower corner
  double pixel_size = 0.0;  // [m]; callers default this to lambda/10
  int width = 0;
  int height = 0;
};

/// Accumulated localization counts on a pixel grid.
struct DensityImage {
  GridSpec grid;
  std::vector<double> counts;  // row-major [z][x]

  double total_mass() const;
};

/// Per-pixel accumulation of locations; out-of-grid locations are dropped.
DensityImage render_density(std::span<const MBLocation> locations,
                            const GridSpec& grid);

/// Mean structural similarity (11x11 Gaussian window, sigma 1.5, standard
/// stability constants from the joint dynamic range), in percent.
double ssim(const DensityImage& a, const DensityImage& b);

} // namespace gulm
