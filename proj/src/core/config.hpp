// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "core/model.hpp"
#include "core/optim.hpp"
#include "core/sensors.hpp"
#include "json.hpp"

namespace usr {

enum class MonitorSignal { Train, Validation };

struct TrainConfig {
  int epochs = 1500;
  double lr_init = 1e-3;
  int batch_size = 64;
  PlateauConfig plateau;
  AdamConfig adam;
  int sensors_per_batch = 1;        // fresh random sensors drawn per batch
  bool per_sample_sensors = false;  // one sensor per batch item instead
  std::uint64_t seed = 0;
  std::string loss = "cosine";
  MonitorSignal monitor = MonitorSignal::Train;
  double train_fraction = 0.5;  // class-balanced split used for the held-out loss
  bool include_unlabeled = false;
  int val_sensors = 8;  // fixed random sensors for the held-out loss
  int checkpoint_every = 10;
  bool record_timing = true;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Everything needed to reproduce a run. JSON layout:
//   {"seed": u64, "encoding": {...}, "encoder": {...}, "decoder": {...},
//    "random_sensor": {...}, "train": {...}}
// Missing keys keep their defaults, unknown keys are rejected, and a
// top-level seed overrides train.seed and random_sensor.seed.
struct GlobalConfig {
  ModelConfig model;
  RandomSensorConfig random_sensor;
  TrainConfig train;

  void validate() const;
};

GlobalConfig default_config();
GlobalConfig parse_config(const nlohmann::json& doc, bool validate = true);
GlobalConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const GlobalConfig& cfg);

// Applies "section.key=value" (value parsed as JSON, else taken as a string).
// Keys and types are checked; cross-field constraints are left to validate()
// so that several overrides can be applied in any order.
void apply_override(GlobalConfig& cfg, const std::string& assignment);

// Desk-scale configuration used by the tests and the example config:
// n=64, hidden 64, heads 4, embed 3.
GlobalConfig desk_config();

}  // namespace usr
