#include "gulm/dsp.hpp"

#include <fftw3.h>

#include <mutex>

#include "gulm/errors.hpp"

namespace gulm {

namespace detail {

// FFTW plan creation/destruction is not thread safe; execution on a plan's
// own buffers is.
static std::mutex g_plan_mutex;

std::vector<std::complex<double>> fft(std::span<const std::complex<double>> x,
                                      bool inverse) {
  const int n = static_cast<int>(x.size());
  if (n == 0) return {};

  fftw_complex* buf = fftw_alloc_complex(n);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    plan = fftw_plan_dft_1d(n, buf, buf,
                            inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                            FFTW_ESTIMATE);
  }
  for (int i = 0; i < n; ++i) {
    buf[i][0] = x[i].real();
    buf[i][1] = x[i].imag();
  }
  fftw_execute(plan);

  std::vector<std::complex<double>> out(n);
  const double scale = inverse ? 1.0 / n : 1.0;
  for (int i = 0; i < n; ++i)
    out[i] = {buf[i][0] * scale, buf[i][1] * scale};

  {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return out;
}

} // namespace detail

std::vector<std::complex<double>> analytic_signal(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  if (n == 0) return {};

  std::vector<std::complex<double>> spec(n);
  for (int i = 0; i < n; ++i) spec[i] = {x[i], 0.0};
  spec = detail::fft(spec, false);

  // Keep DC (and Nyquist for even n), double positives, zero negatives.
  const int half = n / 2;
  for (int k = 1; k < (n + 1) / 2; ++k) spec[k] *= 2.0;
  for (int k = half + 1; k < n; ++k) spec[k] = 0.0;

  return detail::fft(spec, true);
}

std::vector<double> envelope(std::span<const double> x) {
  auto a = analytic_signal(x);
  std::vector<double> env(a.size());
  for (size_t i = 0; i < a.size(); ++i) env[i] = std::abs(a[i]);
  return env;
}

std::vector<double> sinc_upsample(std::span<const double> x, int factor) {
  if (factor < 1) throw ValidationError("upsample factor must be >= 1");
  const int n = static_cast<int>(x.size());
  if (n == 0) return {};
  if (factor == 1) return {x.begin(), x.end()};

  std::vector<std::complex<double>> spec(n);
  for (int i = 0; i < n; ++i) spec[i] = {x[i], 0.0};
  spec = detail::fft(spec, false);

  const int m = n * factor;
  std::vector<std::complex<double>> padded(m, {0.0, 0.0});
  const int half = n / 2;
  for (int k = 0; k <= half; ++k) padded[k] = spec[k];
  for (int k = half + 1; k < n; ++k) padded[m - n + k] = spec[k];
  if (n % 2 == 0) {
    // Split the Nyquist bin so the interpolant stays real.
    padded[half] *= 0.5;
    padded[m - half] = padded[half];
  }

  auto up = detail::fft(padded, true);
  std::vector<double> out(m);
  for (int i = 0; i < m; ++i) out[i] = up[i].real() * factor;
  return out;
}

} // namespace gulm
