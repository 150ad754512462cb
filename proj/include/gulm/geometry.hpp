#pragma once

#include <utility>
#include <vector>

#include "gulm/toa.hpp"
#include "gulm/types.hpp"

namespace gulm {

/// Arrival-time ellipse: locus of points whose distances to the virtual
/// source and one receiver sum to the measured round-trip path.
struct EllipseSpec {
  Vec2 focus_a;     // virtual source
  Vec2 focus_b;     // receiver
  double r_major = 0.0;
  double r_minor = 0.0;
  Vec2 center;      // midpoint of the foci
  Vec2 axis_dir;    // unit vector focus_b - focus_a

  void validate() const;
};

/// Conic in implicit form b0 + b1*x + b2*z + b3*x^2 + b4*x*z + b5*z^2.
struct QuadraticCurve {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0, b4 = 0.0, b5 = 0.0;

  double eval(Vec2 p) const {
    return b0 + b1 * p.x + b2 * p.z + b3 * p.x * p.x + b4 * p.x * p.z +
           b5 * p.z * p.z;
  }
  Vec2 gradient(Vec2 p) const {
    return {b1 + 2.0 * b3 * p.x + b4 * p.z, b2 + b4 * p.x + 2.0 * b5 * p.z};
  }
};

/// Ellipse with the given round-trip path length (c * toa).
EllipseSpec build_ellipse(double toa, Vec2 receiver, Vec2 source,
                          const AcquisitionConfig& config);

/// Same, with the path length already in meters.
EllipseSpec build_ellipse_from_range(double range, Vec2 receiver, Vec2 source);

/// Implicit conic of the ellipse, normalized so boundary points evaluate to
/// zero and the center to a negative value ((s-c)^T M (s-c) - 1 form).
QuadraticCurve ellipse_to_quadratic(const EllipseSpec& e);

struct ConicIntersections {
  std::vector<Vec2> points;      // up to 4, deduplicated
  bool ill_conditioned = false;  // results near the tolerance edge
};

/// All real intersection points of two ellipse conics. Throws
/// CoincidentCurvesError when the curves are identical.
ConicIntersections intersect_ellipses(const QuadraticCurve& a,
                                      const QuadraticCurve& b);

/// Imaging region used to discard mirror and out-of-view intersections.
struct FieldOfView {
  double x_min = -0.01, x_max = 0.01;
  double z_min = 0.0, z_max = 0.02;

  bool contains(Vec2 p) const {
    return p.x >= x_min && p.x <= x_max && p.z > z_min && p.z <= z_max;
  }
};

/// One ellipse-ellipse intersection with provenance.
struct LocalizationCandidate {
  Vec2 position;
  std::pair<int, int> channel_pair{-1, -1};
  int track_id = -1;
  double condition = 1.0;  // sin of the crossing angle; small = glancing
  double range_a = 0.0;    // round-trip path of each generating ellipse [m]
  double range_b = 0.0;
};

struct LocalizeOptions {
  int pair_stride = 0;     // 0 = max(1, observations/8)
  bool all_pairs = false;
};

/// Ellipse intersections for one track, filtered to the imaging region.
std::vector<LocalizationCandidate> localize_track(
    const EchoTrack& track, const TransducerGeometry& geometry,
    const AcquisitionConfig& config, const FieldOfView& field,
    const LocalizeOptions& options = {}, int track_id = -1);

} // namespace gulm
