#include "gulm/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gulm/errors.hpp"

namespace gulm {

namespace {

// Power-of-two grids keep the local-frame decomposition exact: translating
// every candidate by an on-grid vector translates the anchor by the same
// exact amount and leaves local coordinates bit-identical.
constexpr double kAnchorGrid = 9.5367431640625e-07;       // 2^-20 m
constexpr double kPositionGrid = 9.094947017729282e-13;   // 2^-40 m

double snap_down(double v, double grid) {
  return std::floor(v / grid) * grid;
}

double snap_nearest(double v, double grid) {
  return std::round(v / grid) * grid;
}

struct WeightedPoint {
  Vec2 p;
  double w;
};

Vec2 kernel_mean(Vec2 p, std::span<const WeightedPoint> pts, double h) {
  const double inv = 1.0 / (2.0 * h * h);
  double wsum = 0.0;
  Vec2 acc{0.0, 0.0};
  for (const WeightedPoint& s : pts) {
    const double w = s.w * std::exp(-squared_norm(s.p - p) * inv);
    acc += w * s.p;
    wsum += w;
  }
  if (wsum <= 0.0) {
    // All kernel weights underflowed; fall back to the nearest candidate.
    double best = std::numeric_limits<double>::infinity();
    Vec2 nearest = p;
    for (const WeightedPoint& s : pts) {
      const double d = squared_norm(s.p - p);
      if (d < best) { best = d; nearest = s.p; }
    }
    return nearest;
  }
  return acc / wsum;
}

} // namespace

Vec2 mean_shift_step(Vec2 p, std::span<const Vec2> candidates,
                     double bandwidth) {
  if (candidates.empty())
    throw ValidationError("mean_shift_step needs candidates");
  if (!(bandwidth > 0.0))
    throw ValidationError("bandwidth must be positive");
  std::vector<WeightedPoint> pts(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) pts[i] = {candidates[i], 1.0};
  return kernel_mean(p, pts, bandwidth);
}

std::vector<MBLocation> cluster_candidates(
    std::span<const LocalizationCandidate> candidates,
    const ClusterOptions& options) {
  if (candidates.empty()) return {};
  if (!(options.bandwidth > 0.0))
    throw ValidationError("bandwidth must be positive");
  const double h = options.bandwidth;

  // Canonical processing order makes the result permutation invariant.
  std::vector<LocalizationCandidate> sorted(candidates.begin(),
                                            candidates.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const LocalizationCandidate& a, const LocalizationCandidate& b) {
              if (a.position.x != b.position.x) return a.position.x < b.position.x;
              if (a.position.z != b.position.z) return a.position.z < b.position.z;
              if (a.condition != b.condition) return a.condition < b.condition;
              return a.channel_pair < b.channel_pair;
            });

  Vec2 anchor{std::numeric_limits<double>::infinity(),
              std::numeric_limits<double>::infinity()};
  for (const auto& c : sorted) {
    anchor.x = std::min(anchor.x, c.position.x);
    anchor.z = std::min(anchor.z, c.position.z);
  }
  anchor.x = snap_down(anchor.x, kAnchorGrid);
  anchor.z = snap_down(anchor.z, kAnchorGrid);

  std::vector<WeightedPoint> local(sorted.size());
  for (size_t i = 0; i < sorted.size(); ++i) {
    local[i].p = sorted[i].position - anchor;
    local[i].w = options.condition_weights
                     ? std::max(sorted[i].condition, 0.01)
                     : 1.0;
  }

  // Seeds: every candidate, or a bandwidth-spaced grid when there are too
  // many for per-candidate trajectories.
  std::vector<Vec2> seeds;
  if (static_cast<int>(local.size()) <= options.seed_cap) {
    seeds.reserve(local.size());
    for (const auto& s : local) seeds.push_back(s.p);
  } else {
    Vec2 lo{std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec2 hi{-std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};
    for (const auto& s : local) {
      lo.x = std::min(lo.x, s.p.x); lo.z = std::min(lo.z, s.p.z);
      hi.x = std::max(hi.x, s.p.x); hi.z = std::max(hi.z, s.p.z);
    }
    for (double x = lo.x; x <= hi.x + h; x += h)
      for (double z = lo.z; z <= hi.z + h; z += h)
        seeds.push_back({x, z});
  }

  const double step_tol = options.step_tolerance * h;
  std::vector<Vec2> modes(seeds.size());
  for (size_t i = 0; i < seeds.size(); ++i) {
    Vec2 p = seeds[i];
    for (int it = 0; it < options.max_iterations; ++it) {
      const Vec2 next = kernel_mean(p, local, h);
      const double step = distance(next, p);
      p = next;
      if (step < step_tol) break;
    }
    modes[i] = {snap_nearest(p.x, kPositionGrid),
                snap_nearest(p.z, kPositionGrid)};
  }

  // Group identical snapped modes, then merge within the merge radius,
  // higher-population modes first.
  struct ModeGroup {
    Vec2 mode;
    int seed_count = 0;
  };
  std::vector<ModeGroup> groups;
  for (const Vec2& m : modes) {
    bool found = false;
    for (ModeGroup& g : groups)
      if (g.mode.x == m.x && g.mode.z == m.z) { g.seed_count++; found = true; break; }
    if (!found) groups.push_back({m, 1});
  }
  std::sort(groups.begin(), groups.end(), [](const ModeGroup& a, const ModeGroup& b) {
    if (a.seed_count != b.seed_count) return a.seed_count > b.seed_count;
    if (a.mode.x != b.mode.x) return a.mode.x < b.mode.x;
    return a.mode.z < b.mode.z;
  });

  const double merge_radius = options.merge_radius_factor * h;
  std::vector<Vec2> centers;
  for (const ModeGroup& g : groups) {
    bool absorbed = false;
    for (const Vec2& c : centers)
      if (distance(g.mode, c) < merge_radius) { absorbed = true; break; }
    if (!absorbed) centers.push_back(g.mode);
  }

  // Assign candidates to their nearest surviving center.
  const double member_radius = options.member_radius_factor * h;
  std::vector<int> member_count(centers.size(), 0);
  std::vector<double> sq_dist(centers.size(), 0.0);
  for (const auto& s : local) {
    int best = -1;
    double best_d = member_radius;
    for (size_t c = 0; c < centers.size(); ++c) {
      const double d = distance(s.p, centers[c]);
      if (d < best_d) { best_d = d; best = static_cast<int>(c); }
    }
    if (best >= 0) {
      member_count[best]++;
      sq_dist[best] += best_d * best_d;
    }
  }

  std::vector<MBLocation> out;
  for (size_t c = 0; c < centers.size(); ++c) {
    if (member_count[c] < options.min_cluster_size) continue;
    MBLocation loc;
    loc.position = anchor + centers[c];
    loc.support = member_count[c];
    loc.spread = std::sqrt(sq_dist[c] / member_count[c]);
    out.push_back(loc);
  }
  std::sort(out.begin(), out.end(), [](const MBLocation& a, const MBLocation& b) {
    if (a.position.x != b.position.x) return a.position.x < b.position.x;
    return a.position.z < b.position.z;
  });
  return out;
}

} // namespace gulm
