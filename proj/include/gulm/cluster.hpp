#pragma once

#include <span>
#include <vector>

#include "gulm/geometry.hpp"
#include "gulm/types.hpp"

namespace gulm {

/// Fused microbubble position: one cluster of intersection candidates.
struct MBLocation {
  Vec2 position;       // [m]
  int support = 0;     // candidates in the cluster
  double spread = 0.0; // RMS member distance to the centroid [m]
};

/// One kernel-weighted mean update with the Gaussian kernel
/// exp(-|s_i - p|^2 / (2 h^2)).
Vec2 mean_shift_step(Vec2 p, std::span<const Vec2> candidates,
                     double bandwidth);

struct ClusterOptions {
  double bandwidth = 0.0;            // [m]; callers default this to lambda/4
  int min_cluster_size = 2;
  int max_iterations = 100;
  double step_tolerance = 1e-3;      // fraction of bandwidth
  double merge_radius_factor = 0.5;  // fraction of bandwidth
  double member_radius_factor = 2.0; // membership cut, fraction of bandwidth
  int seed_cap = 10000;              // grid seeding beyond this many candidates
  bool condition_weights = true;
};

/// Mean-shift fusion of intersection candidates into bubble positions.
/// Deterministic: candidates are canonically ordered internally, so the
/// output is independent of input order.
std::vector<MBLocation> cluster_candidates(
    std::span<const LocalizationCandidate> candidates,
    const ClusterOptions& options);

} // namespace gulm
