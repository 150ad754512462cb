#pragma once

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "gulm/cluster.hpp"
#include "gulm/eval.hpp"
#include "gulm/geometry.hpp"
#include "gulm/sim.hpp"
#include "gulm/toa.hpp"
#include "gulm/types.hpp"

namespace gulm {

/// Everything a pipeline run needs, resolved from one config file.
struct PipelineOptions {
  std::vector<int> channels;  // subset to process; empty = all
  DetectOptions detect;
  FitOptions fit;
  int match_gap = 1;
  MatchOptions match;
  RefineOptions refine;
  ValidateOptions validate;
  LocalizeOptions localize;
  ClusterOptions cluster;  // bandwidth resolved from the wavelength
  double cluster_bandwidth_wavelengths = 0.25;
};

struct RenderOptions {
  double pixel_size_wavelengths = 0.1;
  double gamma = 0.9;  // display exponent, excluded from metrics
};

struct SceneOptions {
  double amplitude_min = 0.5;
  double amplitude_max = 2.0;
};

struct RunConfig {
  AcquisitionConfig acquisition;
  TransducerGeometry geometry;
  PulseModel pulse;
  NoiseParams noise;
  FieldOfView field;
  PipelineOptions pipeline;
  RenderOptions render;
  SceneOptions scene;
  uint64_t seed = 0;
  std::string digest;  // content hash of the source config text

  /// Channel subset resolved against the acquisition (sorted, validated).
  std::vector<int> active_channels() const;
  double cluster_bandwidth() const;  // [m]
  double render_pixel_size() const;  // [m]
  void validate() const;
};

/// Parse and validate a config. Unknown keys are rejected.
RunConfig read_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

/// Stable hash of the configuration file content (hex digest).
std::string config_digest(const std::string& json_text);

// ---------------------------------------------------------------------------
// RF container: "GULM" magic, version byte, little-endian header, 32-bit
// float samples, one record per frame.

class RFFileWriter {
public:
  RFFileWriter(const std::string& path, const AcquisitionConfig& config);
  ~RFFileWriter();
  RFFileWriter(const RFFileWriter&) = delete;
  RFFileWriter& operator=(const RFFileWriter&) = delete;

  void append(const RFFrame& frame);
  void close();

private:
  std::FILE* file_ = nullptr;
  int num_channels_ = 0;
  int num_samples_ = 0;
};

class RFFileReader {
public:
  explicit RFFileReader(const std::string& path);
  ~RFFileReader();
  RFFileReader(const RFFileReader&) = delete;
  RFFileReader& operator=(const RFFileReader&) = delete;

  int num_channels() const { return num_channels_; }
  int num_samples() const { return num_samples_; }
  double sample_rate() const { return sample_rate_; }

  /// Reads the next frame; returns false at a clean end of file.
  bool next(RFFrame& frame);

private:
  std::FILE* file_ = nullptr;
  int num_channels_ = 0;
  int num_samples_ = 0;
  double sample_rate_ = 0.0;
};

void write_rf(const std::string& path, std::span<const RFFrame> frames,
              const AcquisitionConfig& config);
std::vector<RFFrame> read_rf(const std::string& path);

// ---------------------------------------------------------------------------
// Delimited text artifacts. Writers are deterministic: stable ordering and
// fixed 9-significant-digit float formatting.

struct LocationRecord {
  int64_t frame_id = 0;
  MBLocation location;
};

struct ScoreRecord {
  int64_t frame_id = 0;
  FrameScore score;
};

void write_locations(std::span<const LocationRecord> locations,
                     const std::string& path);
std::vector<LocationRecord> read_locations(const std::string& path);

void write_scores(std::span<const ScoreRecord> scores,
                  const std::string& path);
std::vector<ScoreRecord> read_scores(const std::string& path);

void write_scenes(std::span<const GroundTruthScene> scenes,
                  const std::string& path);
std::vector<GroundTruthScene> read_scenes(const std::string& path);

/// 16-bit binary PGM with peak-normalized intensities; gamma < 1 brightens.
void write_pgm(const DensityImage& image, const std::string& path,
               double gamma = 1.0);

} // namespace gulm
