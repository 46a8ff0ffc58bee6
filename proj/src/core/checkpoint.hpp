// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "core/config.hpp"
#include "core/model.hpp"
#include "core/optim.hpp"
#include "core/rng.hpp"

namespace usr {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN when no held-out set exists
  double lr = 0.0;
  double seconds = 0.0;
};

// Everything required to continue a run bit-exactly.
struct Checkpoint {
  GlobalConfig config;
  std::uint64_t init_seed = 0;
  ModelWeights weights;
  AdamState adam;
  Rng::State rng{};
  PlateauState scheduler;
  int epoch = 0;  // completed epochs
  double best_monitor = 0.0;
  std::vector<EpochRecord> history;
  std::vector<long long> train_ids;
  std::vector<long long> test_ids;

  Model model() const { return Model(config.model, weights, init_seed); }
};

// Layout: 8-byte magic "USRSPCK1", u64 little-endian header length, JSON
// header (configs, state, tensor table), then every tensor as little-endian
// float64 in column-major order at the offsets named in the header.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

inline constexpr int kCheckpointVersion = 1;

}  // namespace usr
