#pragma once

#include <complex>
#include <span>
#include <vector>

namespace gulm {

/// Analytic signal via the frequency-domain construction: negative
/// frequencies zeroed, positive doubled. Any trace length is accepted.
std::vector<std::complex<double>> analytic_signal(std::span<const double> x);

/// Magnitude of the analytic signal.
std::vector<double> envelope(std::span<const double> x);

/// Band-limited (sinc) interpolation by an integer factor through
/// frequency-domain zero padding. Output length is factor * x.size().
std::vector<double> sinc_upsample(std::span<const double> x, int factor);

namespace detail {
/// Forward/inverse complex DFT. Inverse includes the 1/N scaling.
std::vector<std::complex<double>> fft(std::span<const std::complex<double>> x,
                                      bool inverse);
} // namespace detail

} // namespace gulm
