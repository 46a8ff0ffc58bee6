// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "core/error.hpp"

namespace usr {

// 1 - <x, y> / (|x| |y|); zero iff y is a positive multiple of x.
inline double cosine_dissimilarity(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw_data("cosine_dissimilarity: length " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  double xy = 0.0, xx = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xy += x[i] * y[i];
    xx += x[i] * x[i];
    yy += y[i] * y[i];
  }
  if (!(xx > 0.0) || !(yy > 0.0)) throw_numeric("cosine_dissimilarity: zero-norm input");
  const double c = xy / (std::sqrt(xx) * std::sqrt(yy));
  return 1.0 - std::clamp(c, -1.0, 1.0);
}

}  // namespace usr
