// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/error.hpp"

namespace usr {

WavelengthGrid WavelengthGrid::uniform(double start_nm, double end_nm, double step_nm) {
  if (!std::isfinite(start_nm) || !std::isfinite(end_nm) || !std::isfinite(step_nm))
    throw_data("wavelength grid bounds must be finite");
  if (!(start_nm < end_nm)) throw_data("wavelength grid requires start < end");
  if (!(step_nm > 0.0)) throw_data("wavelength grid requires step > 0");
  // The small slack keeps an end point reached up to rounding.
  const auto count = static_cast<std::size_t>(std::floor((end_nm - start_nm) / step_nm + 1e-9)) + 1;
  std::vector<double> pts(count);
  for (std::size_t i = 0; i < count; ++i) pts[i] = start_nm + static_cast<double>(i) * step_nm;
  WavelengthGrid g;
  g.points_ = std::make_shared<const std::vector<double>>(std::move(pts));
  g.step_ = step_nm;
  g.uniform_ = true;
  return g;
}

WavelengthGrid WavelengthGrid::linspace(double start_nm, double end_nm, std::size_t count) {
  if (count < 2) throw_data("wavelength grid needs at least 2 points");
  if (!(start_nm < end_nm)) throw_data("wavelength grid requires start < end");
  const double step = (end_nm - start_nm) / static_cast<double>(count - 1);
  std::vector<double> pts(count);
  for (std::size_t i = 0; i < count; ++i) pts[i] = start_nm + static_cast<double>(i) * step;
  pts.back() = end_nm;
  WavelengthGrid g;
  g.points_ = std::make_shared<const std::vector<double>>(std::move(pts));
  g.step_ = step;
  g.uniform_ = true;
  return g;
}

WavelengthGrid WavelengthGrid::from_points(std::vector<double> points_nm) {
  if (points_nm.size() < 2) throw_data("wavelength grid needs at least 2 points");
  for (std::size_t i = 0; i < points_nm.size(); ++i) {
    if (!std::isfinite(points_nm[i])) throw_data("wavelength grid point " + std::to_string(i) + " is not finite");
    if (i > 0 && !(points_nm[i] > points_nm[i - 1]))
      throw_data("wavelengths must be strictly increasing (index " + std::to_string(i) + ")");
  }
  WavelengthGrid g;
  g.step_ = (points_nm.back() - points_nm.front()) / static_cast<double>(points_nm.size() - 1);
  g.points_ = std::make_shared<const std::vector<double>>(std::move(points_nm));
  g.uniform_ = false;
  return g;
}

bool WavelengthGrid::operator==(const WavelengthGrid& other) const {
  return points_ == other.points_ || *points_ == *other.points_;
}

Spectrum::Spectrum(WavelengthGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw_data("spectrum has " + std::to_string(values_.size()) + " values for " +
               std::to_string(grid_.size()) + " grid points");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw_data("spectrum value " + std::to_string(i) + " is not finite");
  }
}

double Spectrum::value_at(double lambda_nm) const {
  const auto pts = grid_.points();
  if (lambda_nm < pts.front() || lambda_nm > pts.back()) return 0.0;
  auto it = std::upper_bound(pts.begin(), pts.end(), lambda_nm);
  if (it == pts.end()) return values_.back();
  const auto hi = static_cast<std::size_t>(it - pts.begin());
  const std::size_t lo = hi - 1;
  const double t = (lambda_nm - pts[lo]) / (pts[hi] - pts[lo]);
  return values_[lo] + t * (values_[hi] - values_[lo]);
}

double quadrature(std::span<const double> f, std::span<const double> x) {
  if (f.size() != x.size())
    throw_data("quadrature: " + std::to_string(f.size()) + " samples for " + std::to_string(x.size()) +
               " abscissae");
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!std::isfinite(f[i])) throw_data("quadrature: sample " + std::to_string(i) + " is not finite");
  }
  double sum = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i) sum += 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
  return sum;
}

double quadrature(std::span<const double> f, const WavelengthGrid& grid) {
  return quadrature(f, grid.points());
}

double band_srf_value(const Band& band, double lambda_nm) {
  return (lambda_nm >= band.lower_nm() && lambda_nm <= band.upper_nm()) ? band.gain : 0.0;
}

std::vector<SensorViolation> validate_sensor(const SensorSpec& spec) {
  std::vector<SensorViolation> out;
  if (spec.bands.empty()) {
    out.push_back({ViolationKind::Empty, 0, 0, "sensor '" + spec.name + "' has no bands"});
    return out;
  }
  for (std::size_t i = 0; i < spec.bands.size(); ++i) {
    const Band& b = spec.bands[i];
    if (!std::isfinite(b.center_nm) || !(b.fwhm_nm > 0.0) || !std::isfinite(b.fwhm_nm) || !(b.gain > 0.0) ||
        !std::isfinite(b.gain)) {
      std::ostringstream os;
      os << "band " << i << " (center " << b.center_nm << ", fwhm " << b.fwhm_nm << ", gain " << b.gain
         << ") is invalid";
      out.push_back({ViolationKind::InvalidBand, i, i, os.str()});
    }
  }
  for (std::size_t i = 1; i < spec.bands.size(); ++i) {
    if (spec.bands[i].center_nm < spec.bands[i - 1].center_nm) {
      std::ostringstream os;
      os << "bands " << i - 1 << " and " << i << " are not sorted by center";
      out.push_back({ViolationKind::Unsorted, i - 1, i, os.str()});
    }
  }
  if (!spec.allow_overlap) {
    for (std::size_t i = 0; i < spec.bands.size(); ++i) {
      for (std::size_t j = i + 1; j < spec.bands.size(); ++j) {
        const Band& a = spec.bands[i];
        const Band& b = spec.bands[j];
        const double overlap = std::min(a.upper_nm(), b.upper_nm()) - std::max(a.lower_nm(), b.lower_nm());
        if (overlap > kOverlapTolerance) {
          std::ostringstream os;
          os << "band " << i << " [" << a.lower_nm() << ", " << a.upper_nm() << "] overlaps band " << j << " ["
             << b.lower_nm() << ", " << b.upper_nm() << "]";
          out.push_back({ViolationKind::Overlap, i, j, os.str()});
        }
      }
    }
  }
  return out;
}

std::string describe(const std::vector<SensorViolation>& violations) {
  std::string s;
  for (const auto& v : violations) {
    if (!s.empty()) s += "; ";
    s += v.message;
  }
  return s;
}

}  // namespace usr
