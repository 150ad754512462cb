#include "gulm/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "gulm/errors.hpp"

namespace gulm {

namespace {

// Real roots of sum_k coeffs[k] x^k via the companion-matrix eigenvalues.
// Near-real eigenvalues within `imag_tol` of the real axis are returned as
// candidates; `borderline` reports whether any accepted root was close to
// that edge.
struct RootSet {
  std::vector<double> roots;
  bool borderline = false;
};

RootSet poly_real_roots(std::vector<double> coeffs) {
  RootSet out;
  const double scale = [&] {
    double m = 0.0;
    for (double c : coeffs) m = std::max(m, std::abs(c));
    return m;
  }();
  if (scale == 0.0) return out;

  // Trim negligible leading coefficients (degree collapse).
  int degree = static_cast<int>(coeffs.size()) - 1;
  while (degree > 0 && std::abs(coeffs[degree]) < 1e-12 * scale) --degree;
  if (degree == 0) return out;

  if (degree == 1) {
    out.roots.push_back(-coeffs[0] / coeffs[1]);
    return out;
  }
  if (degree == 2) {
    const double a = coeffs[2], b = coeffs[1], c = coeffs[0];
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
      if (disc > -1e-10 * std::max(b * b, std::abs(4.0 * a * c))) {
        out.roots.push_back(-b / (2.0 * a));
        out.borderline = true;
      }
      return out;
    }
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    out.roots.push_back(q / a);
    if (q != 0.0) out.roots.push_back(c / q);
    else out.roots.push_back(-b / (2.0 * a));
    return out;
  }

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int i = 0; i < degree; ++i)
    companion(0, i) = -coeffs[degree - 1 - i] / coeffs[degree];
  for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) {
    out.borderline = true;
    return out;
  }
  const auto& vals = solver.eigenvalues();
  for (int i = 0; i < vals.size(); ++i) {
    const double re = vals(i).real();
    const double im = std::abs(vals(i).imag());
    const double tol = 1e-5 * (1.0 + std::abs(re));
    if (im < tol) {
      out.roots.push_back(re);
      if (im > 1e-10 * (1.0 + std::abs(re))) out.borderline = true;
    }
  }
  return out;
}

// A few Newton iterations on the two-conic system to sharpen a root.
bool newton_polish(const QuadraticCurve& a, const QuadraticCurve& b, Vec2& p) {
  Vec2 q = p;
  for (int it = 0; it < 8; ++it) {
    const double fa = a.eval(q);
    const double fb = b.eval(q);
    const Vec2 ga = a.gradient(q);
    const Vec2 gb = b.gradient(q);
    const double det = ga.x * gb.z - ga.z * gb.x;
    if (std::abs(det) < 1e-30) break;
    const double dx = (fa * gb.z - fb * ga.z) / det;
    const double dz = (ga.x * fb - gb.x * fa) / det;
    q.x -= dx;
    q.z -= dz;
    if (!std::isfinite(q.x) || !std::isfinite(q.z)) return false;
    if (std::abs(dx) + std::abs(dz) < 1e-15 * (1.0 + std::abs(q.x) + std::abs(q.z)))
      break;
  }
  if (std::abs(a.eval(q)) + std::abs(b.eval(q)) <
      std::abs(a.eval(p)) + std::abs(b.eval(p)))
    p = q;
  return true;
}

} // namespace

void EllipseSpec::validate() const {
  if (!(r_minor > 0.0) || r_major < r_minor)
    throw ValidationError("ellipse radii must satisfy r_major >= r_minor > 0");
  const double half_sep = 0.5 * distance(focus_a, focus_b);
  const double focal = r_major * r_major - r_minor * r_minor;
  if (std::abs(focal - half_sep * half_sep) >
      1e-9 * std::max(r_major * r_major, 1e-300))
    throw ValidationError("ellipse radii violate the focal identity");
}

EllipseSpec build_ellipse_from_range(double range, Vec2 receiver, Vec2 source) {
  const double separation = distance(source, receiver);
  if (!(range > separation))
    throw DegenerateEllipseError(
        "round-trip path does not exceed the focal separation");

  EllipseSpec e;
  e.focus_a = source;
  e.focus_b = receiver;
  e.r_major = 0.5 * range;
  e.r_minor = 0.5 * std::sqrt(range * range - separation * separation);
  e.center = 0.5 * (source + receiver);
  e.axis_dir = separation > 0.0 ? (receiver - source) / separation
                                : Vec2{1.0, 0.0};
  return e;
}

EllipseSpec build_ellipse(double toa, Vec2 receiver, Vec2 source,
                          const AcquisitionConfig& config) {
  return build_ellipse_from_range(toa_to_distance(toa, config), receiver,
                                  source);
}

QuadraticCurve ellipse_to_quadratic(const EllipseSpec& e) {
  const Vec2 v = e.axis_dir;
  const Vec2 w = perpendicular(v);
  const double ia = 1.0 / (e.r_major * e.r_major);
  const double ib = 1.0 / (e.r_minor * e.r_minor);

  // M = v v^T / r_major^2 + w w^T / r_minor^2
  const double mxx = ia * v.x * v.x + ib * w.x * w.x;
  const double mxz = ia * v.x * v.z + ib * w.x * w.z;
  const double mzz = ia * v.z * v.z + ib * w.z * w.z;
  const Vec2 c = e.center;

  QuadraticCurve q;
  q.b3 = mxx;
  q.b4 = 2.0 * mxz;
  q.b5 = mzz;
  q.b1 = -2.0 * (mxx * c.x + mxz * c.z);
  q.b2 = -2.0 * (mxz * c.x + mzz * c.z);
  q.b0 = mxx * c.x * c.x + 2.0 * mxz * c.x * c.z + mzz * c.z * c.z - 1.0;
  return q;
}

ConicIntersections intersect_ellipses(const QuadraticCurve& a,
                                      const QuadraticCurve& b) {
  if (!(a.b5 != 0.0) || !(b.b5 != 0.0))
    throw ValidationError("curves must have a nonzero z^2 coefficient");

  // Scale both to unit z^2 so the difference is z^2-free.
  const double a0 = a.b0 / a.b5, a1 = a.b1 / a.b5, a2 = a.b2 / a.b5,
               a3 = a.b3 / a.b5, a4 = a.b4 / a.b5;
  const double d0 = a0 - b.b0 / b.b5, d1 = a1 - b.b1 / b.b5,
               d2 = a2 - b.b2 / b.b5, d3 = a3 - b.b3 / b.b5,
               d4 = a4 - b.b4 / b.b5;

  const double a_scale = std::max({std::abs(a0), std::abs(a1), std::abs(a2),
                                   std::abs(a3), std::abs(a4), 1.0});
  const double d_scale = std::max({std::abs(d0), std::abs(d1), std::abs(d2),
                                   std::abs(d3), std::abs(d4)});
  if (d_scale < 1e-12 * a_scale)
    throw CoincidentCurvesError("ellipses coincide; infinite intersections");

  ConicIntersections result;
  std::vector<Vec2> raw;

  const bool z_free = std::abs(d2) < 1e-14 * d_scale &&
                      std::abs(d4) < 1e-14 * d_scale;
  if (z_free) {
    // D depends on x only: d0 + d1 x + d3 x^2 = 0, then A gives z.
    RootSet xs = poly_real_roots({d0, d1, d3});
    result.ill_conditioned |= xs.borderline;
    for (double x : xs.roots) {
      RootSet zs = poly_real_roots({a0 + a1 * x + a3 * x * x, a2 + a4 * x, 1.0});
      result.ill_conditioned |= zs.borderline;
      for (double z : zs.roots) raw.push_back({x, z});
    }
  } else {
    // z = p(x)/q(x) from D = 0; substituted into A it yields a quartic:
    // p^2 + (a2 + a4 x) p q + (a0 + a1 x + a3 x^2) q^2 = 0.
    const double p0 = -d0, p1 = -d1, p2 = -d3;
    const double q0 = d2, q1 = d4;

    std::vector<double> quartic(5, 0.0);
    quartic[0] += p0 * p0;
    quartic[1] += 2.0 * p0 * p1;
    quartic[2] += p1 * p1 + 2.0 * p0 * p2;
    quartic[3] += 2.0 * p1 * p2;
    quartic[4] += p2 * p2;

    // (a2 + a4 x) * p(x) -> cubic m, then m * q(x).
    const double m0 = a2 * p0;
    const double m1 = a2 * p1 + a4 * p0;
    const double m2 = a2 * p2 + a4 * p1;
    const double m3 = a4 * p2;
    quartic[0] += m0 * q0;
    quartic[1] += m0 * q1 + m1 * q0;
    quartic[2] += m1 * q1 + m2 * q0;
    quartic[3] += m2 * q1 + m3 * q0;
    quartic[4] += m3 * q1;

    // (a0 + a1 x + a3 x^2) * q(x)^2.
    const double s0 = q0 * q0, s1 = 2.0 * q0 * q1, s2 = q1 * q1;
    quartic[0] += a0 * s0;
    quartic[1] += a0 * s1 + a1 * s0;
    quartic[2] += a0 * s2 + a1 * s1 + a3 * s0;
    quartic[3] += a1 * s2 + a3 * s1;
    quartic[4] += a3 * s2;

    RootSet xs = poly_real_roots(quartic);
    result.ill_conditioned |= xs.borderline;
    for (double x : xs.roots) {
      const double qx = q0 + q1 * x;
      const double px = p0 + p1 * x + p2 * x * x;
      if (std::abs(qx) > 1e-9 * d_scale * (1.0 + std::abs(x))) {
        raw.push_back({x, px / qx});
      } else {
        // Division blows up; fall back to A's quadratic in z and keep the
        // roots consistent with D.
        RootSet zs =
            poly_real_roots({a0 + a1 * x + a3 * x * x, a2 + a4 * x, 1.0});
        result.ill_conditioned |= zs.borderline;
        for (double z : zs.roots) {
          const double dres = d0 + d1 * x + d2 * z + d3 * x * x + d4 * x * z;
          if (std::abs(dres) < 1e-6 * std::max(d_scale, 1.0))
            raw.push_back({x, z});
        }
      }
    }
  }

  // Polish on the original curves and keep genuine solutions.
  constexpr double kAcceptResidual = 1e-7;
  constexpr double kNearMissResidual = 1e-3;
  std::vector<Vec2> accepted;
  for (Vec2 p : raw) {
    if (!std::isfinite(p.x) || !std::isfinite(p.z)) continue;
    newton_polish(a, b, p);
    const double res = std::max(std::abs(a.eval(p)), std::abs(b.eval(p)));
    if (res < kAcceptResidual) {
      accepted.push_back(p);
    } else if (res < kNearMissResidual) {
      result.ill_conditioned = true;
    }
  }

  // Dedup within 1e-9 m.
  std::sort(accepted.begin(), accepted.end(), [](Vec2 u, Vec2 v) {
    return u.x != v.x ? u.x < v.x : u.z < v.z;
  });
  for (const Vec2& p : accepted) {
    bool dup = false;
    for (const Vec2& q : result.points)
      if (distance(p, q) < 1e-9) { dup = true; break; }
    if (!dup) result.points.push_back(p);
  }
  return result;
}

std::vector<LocalizationCandidate> localize_track(
    const EchoTrack& track, const TransducerGeometry& geometry,
    const AcquisitionConfig& config, const FieldOfView& field,
    const LocalizeOptions& options, int track_id) {
  track.validate();
  const Vec2 source = geometry.virtual_source;

  struct ObsEllipse {
    int channel = 0;
    double range = 0.0;
    QuadraticCurve curve;
    bool valid = false;
  };
  std::vector<ObsEllipse> ellipses;
  ellipses.reserve(track.observations.size());
  for (const ToAObservation& obs : track.observations) {
    ObsEllipse oe;
    oe.channel = obs.channel_index;
    oe.range = toa_to_distance(obs.toa, config);
    try {
      const EllipseSpec spec = build_ellipse_from_range(
          oe.range, geometry.receivers.at(obs.channel_index), source);
      oe.curve = ellipse_to_quadratic(spec);
      oe.valid = true;
    } catch (const DegenerateEllipseError&) {
      oe.valid = false;
    }
    ellipses.push_back(oe);
  }

  const int span = static_cast<int>(ellipses.size());
  int stride = options.pair_stride;
  if (stride <= 0) stride = std::max(1, span / 8);

  std::vector<std::pair<int, int>> pairs;
  if (options.all_pairs) {
    for (int i = 0; i < span; ++i)
      for (int j = i + 1; j < span; ++j) pairs.emplace_back(i, j);
  } else {
    for (int i = 0; i + stride < span; ++i) pairs.emplace_back(i, i + stride);
  }

  std::vector<LocalizationCandidate> candidates;
  for (auto [i, j] : pairs) {
    const ObsEllipse& ea = ellipses[i];
    const ObsEllipse& eb = ellipses[j];
    if (!ea.valid || !eb.valid) continue;

    ConicIntersections isect;
    try {
      isect = intersect_ellipses(ea.curve, eb.curve);
    } catch (const CoincidentCurvesError&) {
      continue;
    }
    for (const Vec2& p : isect.points) {
      if (!field.contains(p)) continue;
      const Vec2 ga = ea.curve.gradient(p);
      const Vec2 gb = eb.curve.gradient(p);
      const double na = norm(ga), nb = norm(gb);
      double condition = 0.0;
      if (na > 0.0 && nb > 0.0)
        condition = std::abs(cross(ga, gb)) / (na * nb);
      if (isect.ill_conditioned) condition = std::min(condition, 1e-3);

      LocalizationCandidate cand;
      cand.position = p;
      cand.channel_pair = {ea.channel, eb.channel};
      cand.track_id = track_id;
      cand.condition = condition;
      cand.range_a = ea.range;
      cand.range_b = eb.range;
      candidates.push_back(cand);
    }
  }
  return candidates;
}

} // namespace gulm
