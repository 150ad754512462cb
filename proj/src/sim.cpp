#include "gulm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gulm {

namespace detail {

uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b) {
  auto mix = [](uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  uint64_t x = seed ^ 0x6A09E667F3BCC909ULL;
  x = mix(x + 0x9E3779B97F4A7C15ULL * (a + 1));
  x = mix(x + 0x9E3779B97F4A7C15ULL * (b + 1));
  return x;
}

} // namespace detail

namespace {

// mt19937_64 bit stream plus explicit conversions: identical draws on every
// platform, unlike std::normal_distribution.
class Rng {
public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace

void NoiseParams::validate() const {
  if (!(smoothing_sigma > 0.0))
    throw ValidationError("smoothing_sigma must be positive");
  if (!(bandwidth_factor > 0.0))
    throw ValidationError("bandwidth_factor must be positive");
  if (!(rf_noise_factor >= 0.0))
    throw ValidationError("rf_noise_factor must be nonnegative");
}

PulseModel PulseModel::standard(const AcquisitionConfig& config) {
  PulseModel p;
  p.center_frequency = config.center_frequency;
  p.num_cycles = 3;
  p.envelope.alpha = 1.0;
  p.envelope.mu = 0.0;
  p.envelope.sigma =
      0.25 * p.num_cycles * config.samples_per_period();
  p.envelope.eta = 0.5;
  p.envelope.omega = config.carrier_omega();
  p.envelope.phi = 0.0;
  p.model_matched = true;
  return p;
}

PulseModel PulseModel::raised_cosine(const AcquisitionConfig& config) {
  PulseModel p = standard(config);
  p.model_matched = false;
  return p;
}

namespace {

// Raised-cosine pulse for the model-mismatch mode: Hann envelope over
// num_cycles carrier periods, centered on mu.
double raised_cosine_eval(const PulseModel& pulse, double mu_samples,
                          double amplitude, const AcquisitionConfig& config,
                          double t) {
  const double half_len =
      0.5 * pulse.num_cycles * config.samples_per_period();
  const double dt = t - mu_samples;
  if (std::abs(dt) >= half_len) return 0.0;
  const double window = 0.5 * (1.0 + std::cos(M_PI * dt / half_len));
  return amplitude * window *
         std::cos(pulse.envelope.omega * dt + pulse.envelope.phi);
}

} // namespace

RFFrame simulate_frame(const GroundTruthScene& scene,
                       const TransducerGeometry& geometry,
                       const PulseModel& pulse,
                       const AcquisitionConfig& config,
                       const SimOptions& options) {
  config.validate();
  geometry.validate(config.num_channels);
  scene.validate();
  for (const Vec2& p : scene.positions)
    if (!options.field.contains(p))
      throw ValidationError("scatterer outside the simulated field");

  RFFrame frame =
      RFFrame::zeros(config.num_channels, config.num_samples, scene.frame_id);

  const Vec2 source = geometry.virtual_source;
  for (int n = 0; n < config.num_channels; ++n) {
    const Vec2 rx = geometry.receivers[n];
    std::span<double> trace = frame.channel(n);
    for (size_t s = 0; s < scene.positions.size(); ++s) {
      const Vec2 p = scene.positions[s];
      const double path = distance(source, p) + distance(p, rx);
      const double arrival =
          path / config.speed_of_sound + config.transmit_delay_offset;
      const double mu = arrival * config.sample_rate;

      double amplitude = scene.amplitudes[s];
      if (options.spherical_spreading) {
        // One-way falloff normalized to 10 mm so amplitudes stay O(1).
        amplitude *= 0.01 / std::max(0.5 * path, 1e-4);
      }

      if (pulse.model_matched) {
        EchoComponent c = pulse.envelope;
        c.mu += mu;
        c.alpha *= amplitude;
        for (int t = 0; t < config.num_samples; ++t)
          trace[t] += memgo_eval_at(c, t);
      } else {
        for (int t = 0; t < config.num_samples; ++t)
          trace[t] += raised_cosine_eval(pulse, mu, amplitude, config, t);
      }
    }
  }
  return frame;
}

RFFrame add_noise(const RFFrame& frame, const NoiseParams& params) {
  params.validate();
  RFFrame out = frame;
  if (!params.enabled() || params.rf_noise_factor == 0.0) return out;

  const double sigma_p =
      std::sqrt(params.bandwidth_factor * std::pow(10.0, params.power_db / 10.0));
  const double gain_scale =
      std::pow(10.0, (params.amplitude_db + params.clutter_db) / 20.0);
  const double floor_scale = std::pow(10.0, params.clutter_db / 20.0);

  // Unit-mass Gaussian smoothing kernel, truncated at 4 sigma.
  const int radius = static_cast<int>(std::ceil(4.0 * params.smoothing_sigma));
  std::vector<double> kernel(2 * radius + 1);
  double ksum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] =
        std::exp(-0.5 * (i * i) / (params.smoothing_sigma * params.smoothing_sigma));
    ksum += kernel[i + radius];
  }
  for (double& k : kernel) k /= ksum;

  const int t_count = out.num_samples;
  std::vector<double> noise(t_count), smoothed(t_count);
  for (int n = 0; n < out.num_channels; ++n) {
    std::span<double> trace = out.channel(n);
    double max_abs = 0.0;
    for (double v : trace) max_abs = std::max(max_abs, std::abs(v));

    Rng rng(detail::mix_seed(params.rng_seed,
                             static_cast<uint64_t>(out.frame_id), n));
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    for (int t = 0; t < t_count; ++t)
      noise[t] = rng.normal() * sigma_p * max_abs * gain_scale +
                 sign * max_abs * floor_scale;

    for (int t = 0; t < t_count; ++t) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int idx = t + i;
        if (idx >= 0 && idx < t_count) acc += kernel[i + radius] * noise[idx];
      }
      smoothed[t] = acc;
    }
    for (int t = 0; t < t_count; ++t)
      trace[t] += params.rf_noise_factor * smoothed[t];
  }
  return out;
}

GroundTruthScene generate_scene(int num_bubbles, const FieldOfView& field,
                                uint64_t seed, int64_t frame_id,
                                double amplitude_min, double amplitude_max) {
  if (!(field.x_max > field.x_min) || !(field.z_max > field.z_min))
    throw ValidationError("field must have positive area");
  if (!(amplitude_min > 0.0) || amplitude_max < amplitude_min)
    throw ValidationError("invalid amplitude range");
  if (num_bubbles < 0)
    throw ValidationError("num_bubbles must be nonnegative");

  GroundTruthScene scene;
  scene.frame_id = frame_id;
  Rng rng(detail::mix_seed(seed, static_cast<uint64_t>(frame_id),
                           0x5CE11EULL));
  const double log_lo = std::log(amplitude_min);
  const double log_hi = std::log(amplitude_max);
  for (int i = 0; i < num_bubbles; ++i) {
    const double ux = rng.uniform();
    const double uz = rng.uniform();
    const double ua = rng.uniform();
    scene.positions.push_back(
        {field.x_min + ux * (field.x_max - field.x_min),
         field.z_max - uz * (field.z_max - field.z_min)});  // z in (z_min, z_max]
    scene.amplitudes.push_back(std::exp(log_lo + ua * (log_hi - log_lo)));
  }
  return scene;
}

} // namespace gulm
