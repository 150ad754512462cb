#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gulm/signal.hpp"
#include "gulm/types.hpp"

namespace gulm {

/// One echo observed on one channel, with its arrival time in seconds.
struct ToAObservation {
  int channel_index = 0;
  int echo_index = 0;
  double toa = 0.0;          // [s]
  EchoComponent component;   // fitted source component
};

/// The same physical echo seen across two or more distinct channels.
struct EchoTrack {
  std::vector<ToAObservation> observations;
  int reference_channel = 0;

  void validate() const;
};

struct MatchOptions {
  // Extra slack on top of the geometric inter-channel lag bound, in carrier
  // periods.
  double lag_slack_periods = 1.0;
};

/// Heuristic cross-channel echo correspondence. Starting from each unused
/// echo on a reference channel, the search walks outward in steps of `gap`
/// channels (in geometric order along the array), picking per channel the
/// candidate at echo index k+h, h in {-1,0,1}, that minimizes the arrival
/// difference, gated by the physical inter-channel lag bound. A track ends
/// at the first channel without an acceptable candidate.
std::vector<EchoTrack> match_echoes(std::span<const ChannelEchoSet> echo_sets,
                                    int gap,
                                    const TransducerGeometry& geometry,
                                    const AcquisitionConfig& config,
                                    const MatchOptions& options = {});

struct RefineOptions {
  bool subsample_refine = false;  // re-anchor mu on the upsampled envelope
  int upsample_factor = 8;
};

/// Phase-precise ToA: each observation's arrival becomes
/// (mu + phi_ref/omega_ref) / sample_rate - transmit_delay_offset.
/// With subsample refinement enabled, mu is first re-anchored on the
/// sinc-upsampled envelope of the corresponding trace.
EchoTrack phase_refine_toa(
    const EchoTrack& track, const AcquisitionConfig& config,
    const RefineOptions& options = {},
    std::span<const std::vector<double>> waveforms = {});

struct ValidateOptions {
  double threshold_wavelengths = 0.5;  // max reprojection error, in wavelengths
};

enum class RejectReason { none, reprojection_error, degenerate_geometry };

struct ValidationResult {
  bool accepted = false;
  double residual = 0.0;  // max absolute round-trip prediction error [m]
  RejectReason reason = RejectReason::none;
};

/// Triangulates a provisional position from the two widest-baseline
/// observations and checks the predicted round-trip path at every other
/// channel. Tracks with only two observations pass trivially.
ValidationResult reproject_validate(const EchoTrack& track,
                                    const TransducerGeometry& geometry,
                                    const AcquisitionConfig& config,
                                    const ValidateOptions& options = {});

} // namespace gulm
