#pragma once

#include <cstdint>
#include <limits>

#include "gulm/geometry.hpp"
#include "gulm/signal.hpp"
#include "gulm/types.hpp"

namespace gulm {

/// Additive channel-noise model: scaled smoothed Gaussian noise plus a
/// random-sign clutter floor, both relative to the channel's peak amplitude.
struct NoiseParams {
  double clutter_db = -std::numeric_limits<double>::infinity();  // L_C; -inf = off
  double amplitude_db = -10.0;   // L_A
  double power_db = 0.0;         // P
  double bandwidth_factor = 1.0; // B
  double smoothing_sigma = 1.5;  // sigma_f [samples]
  double rf_noise_factor = 4.0;  // RF-domain multiplier
  uint64_t rng_seed = 0;

  bool enabled() const { return std::isfinite(clutter_db); }
  void validate() const;
};

/// Transmit pulse: an echo-model template anchored at its envelope peak.
struct PulseModel {
  double center_frequency = 0.0;  // [Hz]
  int num_cycles = 3;
  EchoComponent envelope;         // template with mu = 0

  static PulseModel standard(const AcquisitionConfig& config);
  /// Raised-cosine envelope variant, outside the fitting model class.
  static PulseModel raised_cosine(const AcquisitionConfig& config);

  bool model_matched = true;  // false for the raised-cosine variant
};

struct SimOptions {
  FieldOfView field;
  bool spherical_spreading = false;  // optional 1/r amplitude falloff
};

/// Round-trip forward model: one pulse per (channel, scatterer) at
/// (|u_s - s| + |s - u_n|) / c plus the configured onset offset.
RFFrame simulate_frame(const GroundTruthScene& scene,
                       const TransducerGeometry& geometry,
                       const PulseModel& pulse,
                       const AcquisitionConfig& config,
                       const SimOptions& options);

/// Applies the noise model; deterministic in (params, frame_id).
RFFrame add_noise(const RFFrame& frame, const NoiseParams& params);

/// Uniform scatterer positions in the field, log-uniform amplitudes.
GroundTruthScene generate_scene(int num_bubbles, const FieldOfView& field,
                                uint64_t seed, int64_t frame_id,
                                double amplitude_min = 0.5,
                                double amplitude_max = 2.0);

namespace detail {
/// SplitMix64 stream-mixing for reproducible per-(frame, channel) draws.
uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b);
} // namespace detail

} // namespace gulm
