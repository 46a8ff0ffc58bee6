// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/spectral.hpp"

namespace usr {

struct Dataset {
  WavelengthGrid grid;
  std::vector<LabeledPixel> pixels;
  std::vector<std::string> class_names;

  std::size_t class_count() const { return class_names.size(); }
  std::size_t labeled_count() const;
  // Pixels whose id is in `ids`, in dataset order.
  std::vector<LabeledPixel> select(const std::vector<long long>& ids) const;
};

struct SplitSpec {
  std::vector<long long> train_ids;
  std::vector<long long> test_ids;
  std::uint64_t seed = 0;
  int trial_index = 0;
};

// Spectral Matrix CSV: header of wavelengths (nm), optional trailing
// `class_id` / `pixel_id` columns, one pixel per row. Empty class_id marks an
// unlabeled row.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(const std::string& csv_text, const std::string& origin = "<string>");
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
std::string format_dataset(const Dataset& dataset);

// Per class: seeded shuffle, first round_half_up(fraction * count) pixels go to
// train. Unlabeled pixels are excluded.
SplitSpec class_balanced_split(const Dataset& dataset, std::uint64_t seed, double fraction = 0.5, int trial_index = 0);

// Smooth positive endmembers (3-6 Gaussian bumps on a floor) per class; each
// pixel is its class endmember times a random scale and a small smooth
// multiplicative perturbation. Classes are assigned round-robin.
Dataset generate_synthetic(std::size_t n_pixels, std::size_t n_classes, const WavelengthGrid& grid,
                           std::uint64_t seed);

// 144 points over 380-1050 nm, the layout of the CASI scenes this targets.
WavelengthGrid default_scene_grid();

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace usr
