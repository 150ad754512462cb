#include "gulm/toa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gulm/dsp.hpp"
#include "gulm/geometry.hpp"

namespace gulm {

void EchoTrack::validate() const {
  if (observations.size() < 2)
    throw ValidationError("echo track needs at least two observations");
  for (size_t i = 0; i < observations.size(); ++i)
    for (size_t j = i + 1; j < observations.size(); ++j)
      if (observations[i].channel_index == observations[j].channel_index)
        throw ValidationError("echo track has duplicate channel indices");
}

std::vector<EchoTrack> match_echoes(std::span<const ChannelEchoSet> echo_sets,
                                    int gap,
                                    const TransducerGeometry& geometry,
                                    const AcquisitionConfig& config,
                                    const MatchOptions& options) {
  if (gap < 1) throw ValidationError("channel gap must be >= 1");
  if (echo_sets.size() < 2)
    throw ValidationError("echo matching needs at least two channels");

  // Process channels in geometric order along the array so the result does
  // not depend on channel labeling.
  std::vector<int> order(echo_sets.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    const Vec2 a = geometry.receivers.at(echo_sets[i].channel_index);
    const Vec2 b = geometry.receivers.at(echo_sets[j].channel_index);
    return a.x != b.x ? a.x < b.x : a.z < b.z;
  });

  const int n_sets = static_cast<int>(echo_sets.size());
  std::vector<std::vector<char>> used(n_sets);
  for (int i = 0; i < n_sets; ++i)
    used[i].assign(echo_sets[i].components.size(), 0);

  const double slack =
      options.lag_slack_periods * config.samples_per_period();
  const double samples_per_meter =
      config.sample_rate / config.speed_of_sound;

  auto receiver_of = [&](int set_idx) -> Vec2 {
    return geometry.receivers.at(echo_sets[set_idx].channel_index);
  };

  std::vector<EchoTrack> tracks;
  for (int ref_pos = 0; ref_pos < n_sets; ++ref_pos) {
    const int ref_set = order[ref_pos];
    const auto& ref_comps = echo_sets[ref_set].components;
    for (int k = 0; k < static_cast<int>(ref_comps.size()); ++k) {
      if (used[ref_set][k]) continue;

      struct Hit { int pos; int set; int echo; double mu; };
      std::vector<Hit> hits{{ref_pos, ref_set, k, ref_comps[k].mu}};

      for (int dir : {+1, -1}) {
        int prev_pos = ref_pos;
        int prev_echo = k;
        double prev_mu = ref_comps[k].mu;
        for (int pos = ref_pos + dir * gap; pos >= 0 && pos < n_sets;
             pos += dir * gap) {
          const int set = order[pos];
          const auto& comps = echo_sets[set].components;
          const double lag_gate =
              distance(receiver_of(order[prev_pos]), receiver_of(set)) *
                  samples_per_meter +
              slack;

          int best_echo = -1;
          double best_lag = lag_gate;
          for (int h = -1; h <= 1; ++h) {
            const int cand = prev_echo + h;
            if (cand < 0 || cand >= static_cast<int>(comps.size())) continue;
            if (used[set][cand]) continue;
            const double lag = std::abs(comps[cand].mu - prev_mu);
            if (lag <= best_lag) {
              best_lag = lag;
              best_echo = cand;
            }
          }
          if (best_echo < 0) break;
          hits.push_back({pos, set, best_echo, comps[best_echo].mu});
          prev_pos = pos;
          prev_echo = best_echo;
          prev_mu = comps[best_echo].mu;
        }
      }

      if (hits.size() < 2) continue;
      std::sort(hits.begin(), hits.end(),
                [](const Hit& a, const Hit& b) { return a.pos < b.pos; });

      EchoTrack track;
      track.reference_channel = echo_sets[ref_set].channel_index;
      for (const Hit& h : hits) {
        used[h.set][h.echo] = 1;
        ToAObservation obs;
        obs.channel_index = echo_sets[h.set].channel_index;
        obs.echo_index = h.echo;
        obs.component = echo_sets[h.set].components[h.echo];
        obs.toa = obs.component.mu / config.sample_rate;
        track.observations.push_back(obs);
      }
      tracks.push_back(std::move(track));
    }
  }
  return tracks;
}

EchoTrack phase_refine_toa(const EchoTrack& track,
                           const AcquisitionConfig& config,
                           const RefineOptions& options,
                           std::span<const std::vector<double>> waveforms) {
  track.validate();
  const ToAObservation* ref = nullptr;
  for (const ToAObservation& obs : track.observations)
    if (obs.channel_index == track.reference_channel) ref = &obs;
  if (!ref)
    throw ValidationError("track has no observation on its reference channel");
  if (!(ref->component.omega > 0.0))
    throw ValidationError("reference component has non-positive omega");

  // Phase converted to the mu time base; dimensional form of the
  // phase-precise alignment.
  const double phase_samples = ref->component.phi / ref->component.omega;
  const double period_samples = 2.0 * M_PI / ref->component.omega;
  if (std::abs(phase_samples) > period_samples)
    throw ValidationError("phase correction exceeds one carrier period");

  const double max_toa =
      config.num_samples / config.sample_rate;

  EchoTrack refined;
  refined.reference_channel = track.reference_channel;
  for (const ToAObservation& obs : track.observations) {
    ToAObservation out = obs;
    double mu = obs.component.mu;

    if (options.subsample_refine &&
        obs.channel_index < static_cast<int>(waveforms.size()) &&
        !waveforms[obs.channel_index].empty()) {
      const int f = options.upsample_factor;
      const auto env =
          envelope(sinc_upsample(waveforms[obs.channel_index], f));
      const int center = static_cast<int>(std::lround(mu * f));
      const int radius = 2 * f;
      int best = std::clamp(center, 0, static_cast<int>(env.size()) - 1);
      for (int i = std::max(0, center - radius);
           i < std::min<int>(env.size(), center + radius + 1); ++i)
        if (env[i] > env[best]) best = i;
      mu = static_cast<double>(best) / f;
    }

    out.toa = (mu + phase_samples) / config.sample_rate -
              config.transmit_delay_offset;
    if (out.toa > 0.0 && out.toa < max_toa)
      refined.observations.push_back(out);
  }
  return refined;
}

ValidationResult reproject_validate(const EchoTrack& track,
                                    const TransducerGeometry& geometry,
                                    const AcquisitionConfig& config,
                                    const ValidateOptions& options) {
  track.validate();
  ValidationResult result;
  if (track.observations.size() == 2) {
    result.accepted = true;  // under-determined; passes by convention
    return result;
  }

  // Widest-baseline pair gives the most stable provisional intersection.
  const auto& obs = track.observations;
  size_t ia = 0, ib = 1;
  double best_baseline = -1.0;
  for (size_t i = 0; i < obs.size(); ++i)
    for (size_t j = i + 1; j < obs.size(); ++j) {
      const double b = distance(geometry.receivers.at(obs[i].channel_index),
                                geometry.receivers.at(obs[j].channel_index));
      if (b > best_baseline) { best_baseline = b; ia = i; ib = j; }
    }

  const Vec2 source = geometry.virtual_source;
  ConicIntersections isect;
  try {
    const EllipseSpec ea = build_ellipse(
        obs[ia].toa, geometry.receivers.at(obs[ia].channel_index), source,
        config);
    const EllipseSpec eb = build_ellipse(
        obs[ib].toa, geometry.receivers.at(obs[ib].channel_index), source,
        config);
    isect = intersect_ellipses(ellipse_to_quadratic(ea),
                               ellipse_to_quadratic(eb));
  } catch (const Error&) {
    result.reason = RejectReason::degenerate_geometry;
    return result;
  }
  if (isect.points.empty()) {
    result.reason = RejectReason::degenerate_geometry;
    return result;
  }

  double best_error = std::numeric_limits<double>::infinity();
  for (const Vec2& p : isect.points) {
    double err = 0.0;
    for (size_t i = 0; i < obs.size(); ++i) {
      if (i == ia || i == ib) continue;
      const Vec2 rx = geometry.receivers.at(obs[i].channel_index);
      const double predicted = distance(source, p) + distance(p, rx);
      const double measured = toa_to_distance(obs[i].toa, config);
      err = std::max(err, std::abs(predicted - measured));
    }
    best_error = std::min(best_error, err);
  }

  result.residual = best_error;
  const double threshold =
      options.threshold_wavelengths * config.wavelength();
  result.accepted = best_error < threshold;
  if (!result.accepted) result.reason = RejectReason::reprojection_error;
  return result;
}

} // namespace gulm
