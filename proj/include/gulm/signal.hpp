#pragma once

#include <array>
#include <span>
#include <vector>

#include "gulm/types.hpp"

namespace gulm {

/// Six-parameter descriptor of one echo: an exponentially modified Gaussian
/// envelope oscillating at the carrier. Times (mu, sigma) are in samples,
/// omega in radians per sample.
struct EchoComponent {
  double alpha = 0.0;  // amplitude
  double mu = 0.0;     // mean time [samples]
  double sigma = 1.0;  // spread [samples], > 0
  double eta = 0.0;    // skew
  double omega = 0.0;  // angular frequency [rad/sample], > 0
  double phi = 0.0;    // phase [rad]

  bool finite() const;
  void validate() const;
};

/// All echoes fitted on one channel, sorted ascending by mu.
struct ChannelEchoSet {
  int channel_index = 0;
  std::vector<EchoComponent> components;
  double fit_residual = 0.0;  // final squared-L2 loss
};

/// Echo model evaluated at a single time point.
double memgo_eval_at(const EchoComponent& c, double t);

/// Echo model evaluated pointwise over a time grid.
std::vector<double> memgo_eval(const EchoComponent& c,
                               std::span<const double> t);

/// Superposition of components over a time grid; empty list gives zeros.
std::vector<double> memgo_sum(std::span<const EchoComponent> components,
                              std::span<const double> t);

/// Squared L2 norm of (waveform - model) on the implicit grid 0..T-1.
double memgo_loss(std::span<const EchoComponent> components,
                  std::span<const double> waveform);

/// Gradient of the echo model w.r.t. (alpha, mu, sigma, eta, omega, phi).
std::array<double, 6> memgo_gradient_at(const EchoComponent& c, double t);

struct DetectOptions {
  double gradient_threshold_factor = 4.0;  // multiple of median |envelope gradient|
  double sigma_fraction = 0.25;            // initial sigma as fraction of pulse length
  double pulse_cycles = 3.0;               // transmit pulse length in carrier cycles
  int max_components = 32;
};

/// Envelope-peak initialization: one candidate component per detected echo.
/// An all-zero trace yields an empty list.
std::vector<EchoComponent> initial_toa_estimates(
    std::span<const double> waveform, const AcquisitionConfig& config,
    const DetectOptions& options = {});

struct FitOptions {
  int max_iterations = 50;
  double initial_damping = 1e-3;
  double damping_increase = 10.0;
  double damping_decrease = 10.0;
  double relative_tolerance = 1e-8;  // stop when loss improves less than this
  bool analytic_jacobian = true;     // finite differences kept for verification
  double sigma_floor = 0.5;          // [samples] reject steps below this spread
  double window_sigmas = 10.0;       // per-component evaluation support
};

/// Fit diverged into non-finite territory; carries the last valid iterate.
class FitDivergedError : public Error {
public:
  FitDivergedError(const std::string& msg, std::vector<EchoComponent> last)
      : Error(msg), last_valid(std::move(last)) {}
  std::vector<EchoComponent> last_valid;
};

/// Damped least-squares refinement of the component set against one trace.
/// The returned loss never exceeds the loss of the initial estimate and the
/// components come back sorted by mu (amplitude descending on ties).
ChannelEchoSet fit_memgo(std::span<const double> waveform,
                         std::vector<EchoComponent> initial,
                         const FitOptions& options = {},
                         int channel_index = 0);

} // namespace gulm
