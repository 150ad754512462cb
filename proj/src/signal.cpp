#include "gulm/signal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "gulm/dsp.hpp"

namespace gulm {

namespace {

constexpr double kSqrt2OverPi = 0.7978845608028654;  // sqrt(2/pi)

struct ModelTerms {
  double gauss;    // exp(-u^2/2)
  double erf_term; // 1 + erf(eta*u/sqrt(2))
  double cosine;   // cos(omega*(t-mu) + phi)
  double sine;     // sin(omega*(t-mu) + phi)
  double u;        // (t - mu) / sigma
  double ez2;      // exp(-(eta*u/sqrt(2))^2)
};

inline ModelTerms eval_terms(const EchoComponent& c, double t) {
  ModelTerms m;
  const double dt = t - c.mu;
  m.u = dt / c.sigma;
  m.gauss = std::exp(-0.5 * m.u * m.u);
  const double zarg = c.eta * m.u * M_SQRT1_2;
  m.erf_term = 1.0 + std::erf(zarg);
  m.ez2 = std::exp(-zarg * zarg);
  const double carg = c.omega * dt + c.phi;
  m.cosine = std::cos(carg);
  m.sine = std::sin(carg);
  return m;
}

// Inclusive-exclusive sample window where the component is non-negligible.
std::pair<int, int> support_window(const EchoComponent& c, int num_samples,
                                   double window_sigmas) {
  const double lo = c.mu - window_sigmas * c.sigma;
  const double hi = c.mu + window_sigmas * c.sigma;
  int a = std::max(0, static_cast<int>(std::floor(lo)));
  int b = std::min(num_samples, static_cast<int>(std::ceil(hi)) + 1);
  if (a >= b) { a = 0; b = 0; }
  return {a, b};
}

} // namespace

bool EchoComponent::finite() const {
  return std::isfinite(alpha) && std::isfinite(mu) && std::isfinite(sigma) &&
         std::isfinite(eta) && std::isfinite(omega) && std::isfinite(phi);
}

void EchoComponent::validate() const {
  if (!finite()) throw ValidationError("echo component has non-finite fields");
  if (!(sigma > 0.0)) throw ValidationError("echo spread sigma must be > 0");
  if (!(omega > 0.0)) throw ValidationError("echo frequency omega must be > 0");
}

double memgo_eval_at(const EchoComponent& c, double t) {
  const ModelTerms m = eval_terms(c, t);
  return c.alpha * m.gauss * m.erf_term * m.cosine;
}

std::vector<double> memgo_eval(const EchoComponent& c,
                               std::span<const double> t) {
  c.validate();
  std::vector<double> out(t.size());
  for (size_t i = 0; i < t.size(); ++i) out[i] = memgo_eval_at(c, t[i]);
  return out;
}

std::vector<double> memgo_sum(std::span<const EchoComponent> components,
                              std::span<const double> t) {
  std::vector<double> out(t.size(), 0.0);
  for (const EchoComponent& c : components) {
    c.validate();
    for (size_t i = 0; i < t.size(); ++i) out[i] += memgo_eval_at(c, t[i]);
  }
  return out;
}

double memgo_loss(std::span<const EchoComponent> components,
                  std::span<const double> waveform) {
  double loss = 0.0;
  for (size_t i = 0; i < waveform.size(); ++i) {
    double model = 0.0;
    for (const EchoComponent& c : components)
      model += memgo_eval_at(c, static_cast<double>(i));
    const double r = waveform[i] - model;
    loss += r * r;
  }
  return loss;
}

std::array<double, 6> memgo_gradient_at(const EchoComponent& c, double t) {
  const ModelTerms m = eval_terms(c, t);
  const double dt = t - c.mu;
  const double gEC = m.gauss * m.erf_term * m.cosine;
  const double erf_deriv = kSqrt2OverPi * m.ez2;  // d(1+erf(eta*u/sqrt2))/d(eta*u)

  std::array<double, 6> g;
  g[0] = gEC;                                                         // alpha
  g[1] = c.alpha * (m.u / c.sigma * gEC                               // mu
                    - m.gauss * m.cosine * erf_deriv * c.eta / c.sigma
                    + m.gauss * m.erf_term * c.omega * m.sine);
  g[2] = c.alpha * (m.u * m.u / c.sigma * gEC                         // sigma
                    - m.gauss * m.cosine * erf_deriv * c.eta * m.u / c.sigma);
  g[3] = c.alpha * m.gauss * m.cosine * erf_deriv * m.u;              // eta
  g[4] = -c.alpha * m.gauss * m.erf_term * m.sine * dt;               // omega
  g[5] = -c.alpha * m.gauss * m.erf_term * m.sine;                    // phi
  return g;
}

std::vector<EchoComponent> initial_toa_estimates(
    std::span<const double> waveform, const AcquisitionConfig& config,
    const DetectOptions& options) {
  const int t_count = static_cast<int>(waveform.size());
  if (t_count < 16)
    throw ValidationError("trace too short for echo detection");
  for (double v : waveform)
    if (!std::isfinite(v))
      throw ValidationError("waveform contains non-finite samples");

  const std::vector<double> env = envelope(waveform);
  const double env_max = *std::max_element(env.begin(), env.end());
  if (env_max <= 0.0) return {};

  std::vector<double> grad(t_count - 1);
  for (int i = 0; i + 1 < t_count; ++i) grad[i] = env[i + 1] - env[i];

  std::vector<double> abs_grad(grad.size());
  for (size_t i = 0; i < grad.size(); ++i) abs_grad[i] = std::abs(grad[i]);
  std::nth_element(abs_grad.begin(), abs_grad.begin() + abs_grad.size() / 2,
                   abs_grad.end());
  const double median_grad = abs_grad[abs_grad.size() / 2];
  const double threshold =
      std::max(options.gradient_threshold_factor * median_grad,
               1e-6 * env_max);

  const double pulse_len = options.pulse_cycles * config.samples_per_period();
  const double sigma0 = std::max(0.5, options.sigma_fraction * pulse_len);
  const double omega0 = config.carrier_omega();

  std::vector<EchoComponent> found;
  bool active = false;
  double peak = 0.0;
  int peak_t = 0;
  auto emit = [&]() {
    EchoComponent c;
    c.alpha = peak;
    c.mu = peak_t;
    c.sigma = sigma0;
    c.eta = 0.0;
    c.omega = omega0;
    c.phi = 0.0;
    found.push_back(c);
  };
  for (int t = 0; t + 1 < t_count; ++t) {
    if (!active) {
      if (grad[t] > threshold) {
        active = true;
        peak = env[t];
        peak_t = t;
      }
    } else {
      if (env[t] > peak) {
        peak = env[t];
        peak_t = t;
      } else if (env[t] < 0.5 * peak) {
        emit();
        active = false;
      }
    }
  }
  if (active) emit();

  if (static_cast<int>(found.size()) > options.max_components) {
    std::stable_sort(found.begin(), found.end(),
                     [](const EchoComponent& a, const EchoComponent& b) {
                       return a.alpha > b.alpha;
                     });
    found.resize(options.max_components);
    std::sort(found.begin(), found.end(),
              [](const EchoComponent& a, const EchoComponent& b) {
                return a.mu < b.mu;
              });
  }
  return found;
}

namespace {

// Model and loss with per-component support windows. The truncation error
// at window_sigmas = 10 is ~1e-22 relative and does not affect any stated
// tolerance.
void accumulate_model(const std::vector<EchoComponent>& comps,
                      std::vector<double>& model, double window_sigmas) {
  std::fill(model.begin(), model.end(), 0.0);
  const int t_count = static_cast<int>(model.size());
  for (const EchoComponent& c : comps) {
    auto [a, b] = support_window(c, t_count, window_sigmas);
    for (int t = a; t < b; ++t) model[t] += memgo_eval_at(c, t);
  }
}

double windowed_loss(std::span<const double> y,
                     const std::vector<EchoComponent>& comps,
                     std::vector<double>& model, double window_sigmas) {
  accumulate_model(comps, model, window_sigmas);
  double loss = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - model[i];
    loss += r * r;
  }
  return loss;
}

void fill_jacobian(const std::vector<EchoComponent>& comps, int t_count,
                   double window_sigmas, bool analytic, Eigen::MatrixXd& jac) {
  jac.setZero();
  for (size_t k = 0; k < comps.size(); ++k) {
    const EchoComponent& c = comps[k];
    auto [a, b] = support_window(c, t_count, window_sigmas);
    if (analytic) {
      for (int t = a; t < b; ++t) {
        const std::array<double, 6> g = memgo_gradient_at(c, t);
        for (int j = 0; j < 6; ++j) jac(t, 6 * k + j) = g[j];
      }
    } else {
      double* fields[6];
      EchoComponent pert = c;
      fields[0] = &pert.alpha; fields[1] = &pert.mu; fields[2] = &pert.sigma;
      fields[3] = &pert.eta;   fields[4] = &pert.omega; fields[5] = &pert.phi;
      for (int j = 0; j < 6; ++j) {
        const double base = *fields[j];
        const double h = 1e-6 * std::max(1.0, std::abs(base));
        *fields[j] = base + h;
        std::vector<double> hi(b - a), lo(b - a);
        for (int t = a; t < b; ++t) hi[t - a] = memgo_eval_at(pert, t);
        *fields[j] = base - h;
        for (int t = a; t < b; ++t) lo[t - a] = memgo_eval_at(pert, t);
        *fields[j] = base;
        for (int t = a; t < b; ++t)
          jac(t, 6 * k + j) = (hi[t - a] - lo[t - a]) / (2.0 * h);
      }
    }
  }
}

void canonicalize(std::vector<EchoComponent>& comps) {
  for (EchoComponent& c : comps) {
    if (c.alpha < 0.0) {
      c.alpha = -c.alpha;
      c.phi += M_PI;
    }
    c.phi -= 2.0 * M_PI * std::round(c.phi / (2.0 * M_PI));
    if (c.phi <= -M_PI) c.phi += 2.0 * M_PI;
  }
  std::stable_sort(comps.begin(), comps.end(),
                   [](const EchoComponent& a, const EchoComponent& b) {
                     if (a.mu != b.mu) return a.mu < b.mu;
                     return a.alpha > b.alpha;  // ties broken by amplitude
                   });
}

} // namespace

ChannelEchoSet fit_memgo(std::span<const double> waveform,
                         std::vector<EchoComponent> initial,
                         const FitOptions& options, int channel_index) {
  if (initial.empty())
    throw ValidationError("fit_memgo needs at least one initial component");
  for (const EchoComponent& c : initial) c.validate();

  const int t_count = static_cast<int>(waveform.size());
  const int n_params = 6 * static_cast<int>(initial.size());

  std::vector<double> model(t_count);
  std::vector<EchoComponent> current = initial;
  double loss = windowed_loss(waveform, current, model, options.window_sigmas);
  if (!std::isfinite(loss))
    throw FitDivergedError("initial components give non-finite loss",
                           std::move(initial));

  Eigen::MatrixXd jac(t_count, n_params);
  Eigen::VectorXd residual(t_count);
  double damping = options.initial_damping;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    fill_jacobian(current, t_count, options.window_sigmas,
                  options.analytic_jacobian, jac);
    accumulate_model(current, model, options.window_sigmas);
    for (int t = 0; t < t_count; ++t) residual(t) = waveform[t] - model[t];

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * residual;
    const double diag_floor = 1e-12 * std::max(jtj.diagonal().maxCoeff(), 1e-30);

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd lhs = jtj;
      for (int i = 0; i < n_params; ++i)
        lhs(i, i) += damping * std::max(jtj(i, i), diag_floor) + diag_floor;
      const Eigen::VectorXd step = lhs.ldlt().solve(jtr);

      std::vector<EchoComponent> trial = current;
      bool valid = step.allFinite();
      if (valid) {
        for (size_t k = 0; k < trial.size(); ++k) {
          EchoComponent& c = trial[k];
          c.alpha += step(6 * k + 0);
          c.mu    += step(6 * k + 1);
          c.sigma += step(6 * k + 2);
          c.eta   += step(6 * k + 3);
          c.omega += step(6 * k + 4);
          c.phi   += step(6 * k + 5);
          if (!c.finite() || c.sigma < options.sigma_floor || c.omega <= 0.0)
            valid = false;
        }
      }

      double trial_loss = std::numeric_limits<double>::infinity();
      if (valid)
        trial_loss =
            windowed_loss(waveform, trial, model, options.window_sigmas);

      if (valid && trial_loss < loss) {
        const double improvement = (loss - trial_loss) / std::max(loss, 1e-300);
        current = std::move(trial);
        loss = trial_loss;
        damping /= options.damping_decrease;
        accepted = true;
        if (improvement < options.relative_tolerance) iter = options.max_iterations;
      } else {
        damping *= options.damping_increase;
        if (damping > 1e14) { iter = options.max_iterations; break; }
      }
    }
  }

  canonicalize(current);
  ChannelEchoSet out;
  out.channel_index = channel_index;
  out.components = std::move(current);
  out.fit_residual = memgo_loss(out.components, waveform);
  return out;
}

} // namespace gulm
