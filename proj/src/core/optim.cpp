// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/optim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/error.hpp"

namespace usr {

AdamState make_adam_state(const ModelWeights& params) {
  return {zeros_like(params), zeros_like(params), 0};
}

void adam_update(Mat& param, const Mat& grad, Mat& m, Mat& v, double lr, long long step, const AdamConfig& cfg) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols()) throw_data("adam: gradient shape mismatch");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
}

void adam_step(ModelWeights& params, const ModelWeights& grads, AdamState& state, double lr, const AdamConfig& cfg) {
  std::vector<const Mat*> g;
  visit_weights(grads, [&](const std::string& name, const Mat& m) {
    if (!m.allFinite()) throw_numeric("adam: non-finite gradient in " + name);
    g.push_back(&m);
  });
  std::vector<Mat*> p, m, v;
  visit_weights(params, [&](const std::string&, Mat& x) { p.push_back(&x); });
  visit_weights(state.m, [&](const std::string&, Mat& x) { m.push_back(&x); });
  visit_weights(state.v, [&](const std::string&, Mat& x) { v.push_back(&x); });
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size())
    throw_data("adam: parameter/gradient/state layouts differ");
  ++state.step;
  for (std::size_t i = 0; i < p.size(); ++i) adam_update(*p[i], *g[i], *m[i], *v[i], lr, state.step, cfg);
}

double plateau_scheduler_update(PlateauState& s, const PlateauConfig& cfg, double loss) {
  if (loss < s.best * (1.0 - cfg.threshold)) {
    s.best = loss;
    s.bad_epochs = 0;
  } else {
    ++s.bad_epochs;
  }
  if (s.bad_epochs >= cfg.patience) {
    s.lr = std::max(s.lr * cfg.factor, cfg.lr_min);
    s.bad_epochs = 0;
  }
  return s.lr;
}

}  // namespace usr
