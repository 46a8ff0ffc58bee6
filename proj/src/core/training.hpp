// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/config.hpp"
#include "core/dataset.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/optim.hpp"

namespace usr {

// Pixels of one split on a shared grid, with targets laid out as rows.
struct TrainingSet {
  WavelengthGrid grid;
  std::vector<Spectrum> spectra;
  Mat targets;         // N x G
  Mat trunk_features;  // G x trunk input

  TrainingSet(const Model& model, const WavelengthGrid& grid, const std::vector<LabeledPixel>& pixels);
  std::size_t size() const { return spectra.size(); }
};

// Filled when an epoch aborts on a non-finite loss or gradient.
struct DivergenceSnapshot {
  int epoch = 0;
  std::vector<std::size_t> batch_indices;
  std::vector<SensorSpec> sensors;
  std::string message;
};

// One pass over `data` in a shuffled order. Each batch draws fresh random
// sensors (clipped to the data range), reconstructs every pixel from its
// sensor view and takes one Adam step on the mean cosine dissimilarity.
// Returns the size-weighted mean batch loss.
double train_epoch(Model& model, AdamState& adam, const TrainingSet& data, const TrainConfig& cfg,
                   const RandomSensorConfig& sensor_cfg, double lr, Rng& rng, DivergenceSnapshot* snapshot = nullptr);

// Mean reconstruction loss under a fixed list of sensors.
double evaluation_loss(const Model& model, const TrainingSet& data, const std::vector<SensorSpec>& sensors);

struct TrainOptions {
  std::optional<std::filesystem::path> resume;
  std::optional<SplitSpec> split;  // overrides the config-derived split
  bool write_files = true;
};

struct TrainResult {
  Checkpoint final_state;
  std::vector<EpochRecord> history;
};

// Splits the data, trains for cfg.train.epochs (continuing from a checkpoint
// when resuming) and writes history.csv, last.ckpt (every checkpoint_every
// epochs and at the end), best.ckpt and final.ckpt under out_dir.
TrainResult run_training(const Dataset& dataset, const GlobalConfig& cfg, const std::filesystem::path& out_dir,
                         const TrainOptions& options = {});

// Finite-difference check of the full reconstruction loss on a few synthetic
// pixels seen through one random sensor.
GradientCheckReport synthetic_gradient_check(const ModelConfig& model_cfg, const RandomSensorConfig& sensor_cfg,
                                             std::uint64_t seed, std::size_t samples = 200, double step = 1e-6,
                                             std::size_t pixels = 4);

std::string format_history(const std::vector<EpochRecord>& history);

}  // namespace usr
