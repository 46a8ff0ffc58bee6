// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace usr {

// Wavelength axis in nanometers. Either a uniform lattice (start, start+step,
// ..., <= end) or an explicit strictly increasing list of points, as read from
// a dataset header. Copies share the immutable point storage.
class WavelengthGrid {
 public:
  static WavelengthGrid uniform(double start_nm, double end_nm, double step_nm);
  // Uniform lattice of exactly `count` points spanning [start_nm, end_nm].
  static WavelengthGrid linspace(double start_nm, double end_nm, std::size_t count);
  static WavelengthGrid from_points(std::vector<double> points_nm);

  double start() const { return points_->front(); }
  double end() const { return points_->back(); }
  std::size_t size() const { return points_->size(); }
  std::span<const double> points() const { return *points_; }
  double operator[](std::size_t i) const { return (*points_)[i]; }

  bool is_uniform() const { return uniform_; }
  // Nominal spacing: the lattice step, or the mean spacing of explicit points.
  double step() const { return step_; }

  bool operator==(const WavelengthGrid& other) const;

 private:
  WavelengthGrid() = default;
  std::shared_ptr<const std::vector<double>> points_;
  double step_ = 0.0;
  bool uniform_ = false;
};

class Spectrum {
 public:
  Spectrum(WavelengthGrid grid, std::vector<double> values);

  const WavelengthGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  // Linear interpolation between grid points; 0 outside [start, end].
  double value_at(double lambda_nm) const;

 private:
  WavelengthGrid grid_;
  std::vector<double> values_;
};

// Square-wave spectral response: `gain` on the closed interval
// [center - fwhm/2, center + fwhm/2], zero elsewhere.
struct Band {
  double center_nm = 0.0;
  double fwhm_nm = 0.0;
  double gain = 1.0;

  double lower_nm() const { return center_nm - 0.5 * fwhm_nm; }
  double upper_nm() const { return center_nm + 0.5 * fwhm_nm; }
  bool operator==(const Band&) const = default;
};

struct SensorSpec {
  std::string name;
  std::vector<Band> bands;
  // Real instruments (e.g. ALI's panchromatic band) may overlap; generated
  // training sensors never do.
  bool allow_overlap = false;

  bool operator==(const SensorSpec&) const = default;
};

struct LabeledPixel {
  Spectrum spectrum;
  int class_id = -1;  // -1 marks an unlabeled row
  long long pixel_id = 0;

  bool labeled() const { return class_id >= 0; }
};

enum class ViolationKind { Empty, InvalidBand, Unsorted, Overlap };

struct SensorViolation {
  ViolationKind kind;
  std::size_t first = 0;
  std::size_t second = 0;
  std::string message;
};

// Trapezoidal rule over the grid points (uniform or not).
double quadrature(std::span<const double> f_samples, const WavelengthGrid& grid);
// Trapezoidal rule over arbitrary increasing abscissae.
double quadrature(std::span<const double> f_samples, std::span<const double> x);

double band_srf_value(const Band& band, double lambda_nm);

// Every invariant violation; empty means valid.
std::vector<SensorViolation> validate_sensor(const SensorSpec& spec);
std::string describe(const std::vector<SensorViolation>& violations);

// Overlap below this measure (nm) is treated as touching endpoints.
inline constexpr double kOverlapTolerance = 1e-9;

}  // namespace usr
