// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>

#include "core/model.hpp"

namespace usr {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool operator==(const AdamConfig&) const = default;
};

struct AdamState {
  ModelWeights m, v;
  long long step = 0;
};

AdamState make_adam_state(const ModelWeights& params);

// One bias-corrected Adam update of a single tensor; `step` is the 1-based
// step index after incrementing.
void adam_update(Mat& param, const Mat& grad, Mat& m, Mat& v, double lr, long long step, const AdamConfig& cfg);

// Throws on non-finite gradients before touching any parameter.
void adam_step(ModelWeights& params, const ModelWeights& grads, AdamState& state, double lr,
               const AdamConfig& cfg = {});

struct PlateauConfig {
  int patience = 50;
  double factor = 0.5;
  double threshold = 1e-4;  // relative improvement needed to reset patience
  double lr_min = 1e-6;
  bool operator==(const PlateauConfig&) const = default;
};

struct PlateauState {
  double lr = 1e-3;
  double best = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
};

// Reduce-on-plateau: after `patience` epochs without a relative improvement
// of `threshold` over the best loss, lr <- max(lr * factor, lr_min).
double plateau_scheduler_update(PlateauState& state, const PlateauConfig& cfg, double epoch_loss);

}  // namespace usr
