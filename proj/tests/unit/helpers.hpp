// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "core/spectral.hpp"

namespace testing {

inline std::vector<double> range(double start, double end, double step) {
  std::vector<double> out;
  for (std::size_t i = 0;; ++i) {
    const double v = start + static_cast<double>(i) * step;
    if (v > end + 1e-9) break;
    out.push_back(v);
  }
  return out;
}

template <class F>
usr::Spectrum spectrum_from(const usr::WavelengthGrid& grid, F f) {
  std::vector<double> v;
  for (double l : grid.points()) v.push_back(f(l));
  return usr::Spectrum(grid, v);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("usr_spectral_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::filesystem::path data_dir() { return USR_SPECTRAL_DATA_DIR; }

}  // namespace testing
