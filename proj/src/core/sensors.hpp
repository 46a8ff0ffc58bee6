// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/rng.hpp"
#include "core/spectral.hpp"

namespace usr {

struct SensorSample {
  SensorSpec sensor;                  // surviving bands, in order
  std::vector<double> measurements;  // one per band
};

struct DroppedBand {
  std::size_t index;  // index in the input sensor
  Band band;
  std::string reason;
};

struct ClippedSensor {
  SensorSpec sensor;
  std::vector<DroppedBand> dropped;
};

struct RandomSensorConfig {
  int min_bands = 3;
  int max_bands = 144;
  double band_count_decay = 0.1;
  double center_min_nm = 350.0;
  double center_max_nm = 1050.0;
  double center_step_nm = 5.0;
  double width_min_nm = 1.0;
  double width_max_nm = 200.0;
  std::uint64_t seed = 0;

  void validate() const;
  // Number of lattice points available for band centers.
  int lattice_size() const;
  bool operator==(const RandomSensorConfig&) const = default;
};

// Band responses of a spectrum: ratio of trapezoidal integrals of x*SRF and
// SRF over the spectrum's own grid points plus the band edges (spectrum
// linearly interpolated there). Bands with no support inside the grid are
// dropped and logged.
SensorSample convolve(const Spectrum& spectrum, const SensorSpec& sensor, std::vector<DroppedBand>* dropped = nullptr);

// Bands with zero-measure overlap of [start, end] are dropped; partial ones
// are truncated to the grid range. Throws when nothing survives.
ClippedSensor clip_to_range(const SensorSpec& sensor, const WavelengthGrid& grid);

// Probability of each band count k in [min_bands, k_max] where k_max also
// respects the center lattice size.
std::vector<double> band_count_distribution(const RandomSensorConfig& cfg);

SensorSpec sample_random_sensor(const RandomSensorConfig& cfg, Rng& rng);

// Draws random sensors until one keeps at least one band after clipping.
ClippedSensor sample_usable_sensor(const RandomSensorConfig& cfg, const WavelengthGrid& grid, Rng& rng);

// One band per grid point, edges at midpoints between neighbours.
// Every pixel seen through `sensor` (clipped to the data range). The new grid
// holds the surviving band centers; labels and ids carry over.
Dataset augment_dataset(const Dataset& dataset, const SensorSpec& sensor);

SensorSpec identity_sensor(const WavelengthGrid& grid, const std::string& name = "identity");

SensorSpec parse_sensor_spec(const std::string& json_text, const std::string& origin = "<string>");
SensorSpec load_sensor_spec(const std::filesystem::path& path);
std::string sensor_spec_to_json(const SensorSpec& spec);

// All *.json sensor files in a directory, sorted by file name.
std::vector<SensorSpec> load_sensor_dir(const std::filesystem::path& dir);

}  // namespace usr
