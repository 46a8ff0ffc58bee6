// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/model.hpp"
#include "core/sensors.hpp"

namespace usr {

// Anything that maps a spectrum seen through a sensor to an embedding and a
// reconstruction on the spectrum's own grid.
class Reconstructor {
 public:
  virtual ~Reconstructor() = default;
  // Rows follow `spectra`; all spectra share one grid.
  virtual Mat reconstruct(const std::vector<Spectrum>& spectra, const SensorSpec& sensor) const = 0;
  virtual Mat embed(const std::vector<Spectrum>& spectra, const SensorSpec& sensor) const = 0;
};

class ModelReconstructor : public Reconstructor {
 public:
  explicit ModelReconstructor(Model model) : model_(std::move(model)) {}
  const Model& model() const { return model_; }
  Mat reconstruct(const std::vector<Spectrum>& spectra, const SensorSpec& sensor) const override;
  Mat embed(const std::vector<Spectrum>& spectra, const SensorSpec& sensor) const override;

 private:
  Model model_;
};

struct ReconRow {
  std::string sensor;
  double bands = 0;  // after clipping; mean count for the Random row
  double mean = 0;   // mean cosine dissimilarity over test pixels (and trials)
  double stdev = 0;  // sample standard deviation over trials
  int trials = 1;
};

struct ShiftRow {
  std::string sensor_a, sensor_b;
  double mean = 0;
  double stdev = 0;
  int trials = 1;
};

inline constexpr int kDefaultRandomSensors = 200;
inline const std::string kRandomRowName = "Random";

std::vector<ReconRow> evaluate_reconstruction(const Reconstructor& model, const std::vector<Spectrum>& test_pixels,
                                              const std::vector<SensorSpec>& sensors,
                                              const RandomSensorConfig& random_cfg,
                                              int n_random = kDefaultRandomSensors);

enum class ShiftDenominator {
  CrossPairs,   // mean |a_i - b_j| over ordered pairs i != j
  WithinPairs,  // mean of |a_i - a_j| and |b_i - b_j| over ordered pairs i != j
};

double relative_pixel_shift(const Mat& emb_a, const Mat& emb_b, ShiftDenominator denom = ShiftDenominator::CrossPairs);

// Every unordered pair of sensors, each sensor clipped to the pixel grid.
std::vector<ShiftRow> evaluate_shift(const Reconstructor& model, const std::vector<Spectrum>& test_pixels,
                                     const std::vector<SensorSpec>& sensors,
                                     ShiftDenominator denom = ShiftDenominator::CrossPairs);

struct CrossValidationResult {
  std::vector<ReconRow> recon;
  std::vector<ShiftRow> shift;
  std::vector<SplitSpec> splits;
  std::vector<std::vector<ReconRow>> per_trial_recon;
  std::vector<std::vector<ShiftRow>> per_trial_shift;
};

using Trainer = std::function<std::unique_ptr<Reconstructor>(const Dataset&, const SplitSpec&)>;

struct CrossValidationOptions {
  int n_trials = 5;
  std::uint64_t seed = 0;
  double train_fraction = 0.5;
  RandomSensorConfig random_cfg;
  int n_random = kDefaultRandomSensors;
  ShiftDenominator denom = ShiftDenominator::CrossPairs;
};

CrossValidationResult cross_validate(const Dataset& dataset, const std::vector<SensorSpec>& sensors,
                                     const Trainer& trainer, const CrossValidationOptions& options = {});

// Class-id -> display name, plus merges. Classes listed in `excluded` are
// dropped from exports; classes absent from `merge` keep their own name.
struct ClassMap {
  std::vector<std::string> class_names;
  std::map<std::string, std::string> merge;
  std::vector<std::string> excluded;

  std::string name_of(int class_id) const;
  // nullopt when the class is excluded.
  std::optional<std::string> merged(int class_id) const;
};

ClassMap parse_class_map(const std::string& json_text, const std::string& origin = "<string>");
ClassMap load_class_map(const std::filesystem::path& path);

// CSV rows: pixel_id,class_id,merged_class,e1..eD.
std::string export_embeddings(const Reconstructor& model, const std::vector<LabeledPixel>& pixels,
                              const SensorSpec& sensor, const ClassMap& class_map);

std::string format_recon_report(const std::vector<ReconRow>& rows);
std::string format_shift_report(const std::vector<ShiftRow>& rows);

std::vector<Spectrum> spectra_of(const std::vector<LabeledPixel>& pixels);

}  // namespace usr
