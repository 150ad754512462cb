#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "gulm/errors.hpp"

namespace gulm {

/// 2-D point/vector in meters. Convention: x lateral (along the array),
/// z axial (depth, positive away from the array), array at z = 0.
struct Vec2 {
  double x{0.0};
  double z{0.0};

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.z + b.z}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.z - b.z}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.z}; }
  friend Vec2 operator*(Vec2 v, double s) { return s * v; }
  friend Vec2 operator/(Vec2 v, double s) { return {v.x / s, v.z / s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; z += o.z; return *this; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.z * b.z; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.z - a.z * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.z); }
inline double squared_norm(Vec2 v) { return v.x * v.x + v.z * v.z; }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 perpendicular(Vec2 v) { return {-v.z, v.x}; }

/// Acquisition parameters shared by every stage of the pipeline.
struct AcquisitionConfig {
  double speed_of_sound = 1540.0;      // [m/s]
  double sample_rate = 31.25e6;        // [Hz]
  double center_frequency = 7.8125e6;  // [Hz]
  int num_channels = 16;               // N
  int num_samples = 768;               // T
  double transmit_delay_offset = 0.0;  // [s] offset between geometric arrival and envelope peak

  /// speed_of_sound / center_frequency, [m].
  double wavelength() const { return speed_of_sound / center_frequency; }

  /// Carrier angular frequency in radians per sample.
  double carrier_omega() const {
    return 2.0 * M_PI * center_frequency / sample_rate;
  }

  /// Samples per carrier period.
  double samples_per_period() const { return sample_rate / center_frequency; }

  void validate() const;
};

/// Receiver layout and the virtual transmit origin.
struct TransducerGeometry {
  std::vector<Vec2> receivers;     // [m], one per channel
  Vec2 virtual_source{0.0, 0.0};   // [m]

  /// Evenly pitched array centered on `center`, elements at z = center.z.
  static TransducerGeometry linear_array(int num_channels, double pitch,
                                         Vec2 center = {0.0, 0.0});

  void validate(int num_channels) const;
};

/// One acquisition: per-channel RF amplitude traces.
struct RFFrame {
  int64_t frame_id = 0;
  int num_channels = 0;
  int num_samples = 0;
  std::vector<double> samples;  // row-major [channel][sample]

  std::span<const double> channel(int n) const {
    return {samples.data() + static_cast<size_t>(n) * num_samples,
            static_cast<size_t>(num_samples)};
  }
  std::span<double> channel(int n) {
    return {samples.data() + static_cast<size_t>(n) * num_samples,
            static_cast<size_t>(num_samples)};
  }

  static RFFrame zeros(int num_channels, int num_samples, int64_t frame_id = 0);
  void validate(const AcquisitionConfig& config) const;
};

/// Known scatterer positions and amplitudes for one frame.
struct GroundTruthScene {
  std::vector<Vec2> positions;     // [m]
  std::vector<double> amplitudes;  // > 0, dimensionless
  int64_t frame_id = 0;

  void validate() const;
};

/// One-way-equivalent arrival time to round-trip path length.
double toa_to_distance(double toa, const AcquisitionConfig& config);

/// Inverse of toa_to_distance.
double distance_to_toa(double dist, const AcquisitionConfig& config);

} // namespace gulm
