#include "gulm/types.hpp"

#include <algorithm>
#include <string>

namespace gulm {

void AcquisitionConfig::validate() const {
  if (!(speed_of_sound > 0.0))
    throw ValidationError("speed_of_sound must be positive");
  if (!(sample_rate > 0.0))
    throw ValidationError("sample_rate must be positive");
  if (!(center_frequency > 0.0))
    throw ValidationError("center_frequency must be positive");
  if (num_channels < 2)
    throw ValidationError("num_channels must be at least 2");
  if (num_samples < 1)
    throw ValidationError("num_samples must be at least 1");
  if (!std::isfinite(transmit_delay_offset))
    throw ValidationError("transmit_delay_offset must be finite");
}

TransducerGeometry TransducerGeometry::linear_array(int num_channels,
                                                    double pitch,
                                                    Vec2 center) {
  if (num_channels < 2)
    throw ValidationError("linear_array needs at least 2 elements");
  if (!(pitch > 0.0))
    throw ValidationError("pitch must be positive");
  TransducerGeometry g;
  g.receivers.reserve(num_channels);
  const double half_span = 0.5 * (num_channels - 1) * pitch;
  for (int n = 0; n < num_channels; ++n)
    g.receivers.push_back({center.x - half_span + n * pitch, center.z});
  g.virtual_source = center;
  return g;
}

void TransducerGeometry::validate(int num_channels) const {
  if (static_cast<int>(receivers.size()) != num_channels)
    throw ValidationError("geometry has " + std::to_string(receivers.size()) +
                          " receivers, config expects " +
                          std::to_string(num_channels));
  for (const Vec2& r : receivers)
    if (!std::isfinite(r.x) || !std::isfinite(r.z))
      throw ValidationError("receiver position must be finite");
  if (!std::isfinite(virtual_source.x) || !std::isfinite(virtual_source.z))
    throw ValidationError("virtual source must be finite");
  for (size_t i = 0; i < receivers.size(); ++i)
    for (size_t j = i + 1; j < receivers.size(); ++j)
      if (receivers[i].x == receivers[j].x && receivers[i].z == receivers[j].z)
        throw ValidationError("receiver positions must be pairwise distinct");
}

RFFrame RFFrame::zeros(int num_channels, int num_samples, int64_t frame_id) {
  RFFrame f;
  f.frame_id = frame_id;
  f.num_channels = num_channels;
  f.num_samples = num_samples;
  f.samples.assign(static_cast<size_t>(num_channels) * num_samples, 0.0);
  return f;
}

void RFFrame::validate(const AcquisitionConfig& config) const {
  if (num_channels != config.num_channels || num_samples != config.num_samples)
    throw ValidationError("frame dimensions do not match acquisition config");
  if (samples.size() != static_cast<size_t>(num_channels) * num_samples)
    throw ValidationError("frame sample buffer has wrong size");
  for (double v : samples)
    if (!std::isfinite(v))
      throw ValidationError("frame contains non-finite samples");
}

void GroundTruthScene::validate() const {
  if (positions.size() != amplitudes.size())
    throw ValidationError("scene positions and amplitudes differ in length");
  for (double a : amplitudes)
    if (!(a > 0.0))
      throw ValidationError("scene amplitudes must be positive");
}

double toa_to_distance(double toa, const AcquisitionConfig& config) {
  if (toa < 0.0)
    throw ValidationError("time of arrival must be nonnegative");
  return toa * config.speed_of_sound;
}

double distance_to_toa(double dist, const AcquisitionConfig& config) {
  if (dist < 0.0)
    throw ValidationError("distance must be nonnegative");
  return dist / config.speed_of_sound;
}

} // namespace gulm
