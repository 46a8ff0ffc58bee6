// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "core/error.hpp"
#include "core/log.hpp"
#include "json.hpp"

namespace usr {

void RandomSensorConfig::validate() const {
  if (min_bands < 1) throw_usage("random_sensor.min_bands must be >= 1");
  if (min_bands > max_bands) throw_usage("random_sensor.min_bands must be <= random_sensor.max_bands");
  if (!(band_count_decay > 0.0)) throw_usage("random_sensor.band_count_decay must be positive");
  if (!(width_min_nm > 0.0) || width_min_nm > width_max_nm)
    throw_usage("random_sensor.width_min_nm must be positive and <= width_max_nm");
  if (!(center_step_nm > 0.0) || !(center_min_nm < center_max_nm))
    throw_usage("random_sensor center lattice is degenerate");
  if (width_min_nm > center_step_nm)
    throw_usage("random_sensor.width_min_nm must not exceed center_step_nm (non-overlap cannot be guaranteed)");
  if (lattice_size() < min_bands)
    throw_usage("random_sensor center lattice has " + std::to_string(lattice_size()) + " points, fewer than min_bands " +
                std::to_string(min_bands));
}

int RandomSensorConfig::lattice_size() const {
  return static_cast<int>(std::floor((center_max_nm - center_min_nm) / center_step_nm + 1e-9)) + 1;
}

SensorSample convolve(const Spectrum& spectrum, const SensorSpec& sensor, std::vector<DroppedBand>* dropped) {
  const WavelengthGrid& grid = spectrum.grid();
  const auto pts = grid.points();
  const auto x = spectrum.values();
  SensorSample out;
  out.sensor.name = sensor.name;
  out.sensor.allow_overlap = sensor.allow_overlap;
  std::vector<double> nodes, srf, weighted;
  for (std::size_t b = 0; b < sensor.bands.size(); ++b) {
    const Band& band = sensor.bands[b];
    const double overlap = std::min(band.upper_nm(), grid.end()) - std::max(band.lower_nm(), grid.start());
    if (!(overlap > 0.0)) {
      log::warn("band_dropped", {{"sensor", sensor.name}, {"band", b}, {"center_nm", band.center_nm},
                                 {"reason", "outside data range"}});
      if (dropped) dropped->push_back({b, band, "outside data range"});
      continue;
    }
    // Nodes: the clipped band edges plus every grid point strictly inside, so
    // the boxcar's discontinuities fall on nodes instead of between samples.
    const double lo = std::max(band.lower_nm(), grid.start());
    const double hi = std::min(band.upper_nm(), grid.end());
    const auto first = static_cast<std::size_t>(std::upper_bound(pts.begin(), pts.end(), lo) - pts.begin());
    const auto last = static_cast<std::size_t>(std::lower_bound(pts.begin(), pts.end(), hi) - pts.begin());
    nodes.assign(1, lo);
    srf.assign(1, band.gain);
    weighted.assign(1, band.gain * spectrum.value_at(lo));
    for (std::size_t i = first; i < last; ++i) {
      nodes.push_back(pts[i]);
      srf.push_back(band.gain);
      weighted.push_back(band.gain * x[i]);
    }
    nodes.push_back(hi);
    srf.push_back(band.gain);
    weighted.push_back(band.gain * spectrum.value_at(hi));
    const double response = quadrature(weighted, nodes) / quadrature(srf, nodes);
    out.sensor.bands.push_back(band);
    out.measurements.push_back(response);
  }
  if (out.sensor.bands.empty()) throw_data("sensor '" + sensor.name + "' has no band inside the data range");
  return out;
}

ClippedSensor clip_to_range(const SensorSpec& sensor, const WavelengthGrid& grid) {
  ClippedSensor out;
  out.sensor.name = sensor.name;
  out.sensor.allow_overlap = sensor.allow_overlap;
  for (std::size_t i = 0; i < sensor.bands.size(); ++i) {
    const Band& b = sensor.bands[i];
    const double lo = std::max(b.lower_nm(), grid.start());
    const double hi = std::min(b.upper_nm(), grid.end());
    if (!(hi - lo > 0.0)) {
      out.dropped.push_back({i, b, "outside data range"});
      continue;
    }
    if (lo == b.lower_nm() && hi == b.upper_nm()) {
      out.sensor.bands.push_back(b);
    } else {
      out.sensor.bands.push_back({0.5 * (lo + hi), hi - lo, b.gain});
    }
  }
  if (out.sensor.bands.empty())
    throw_data("sensor '" + sensor.name + "' has no band inside [" + std::to_string(grid.start()) + ", " +
               std::to_string(grid.end()) + "] nm");
  return out;
}

std::vector<double> band_count_distribution(const RandomSensorConfig& cfg) {
  cfg.validate();
  const int k_max = std::min(cfg.max_bands, cfg.lattice_size());
  std::vector<double> p(static_cast<std::size_t>(k_max - cfg.min_bands + 1));
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = std::exp(-cfg.band_count_decay * static_cast<double>(j));
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= total;
  return p;
}

SensorSpec sample_random_sensor(const RandomSensorConfig& cfg, Rng& rng) {
  cfg.validate();
  const int lattice = cfg.lattice_size();
  const int k_max = std::min(cfg.max_bands, lattice);

  // Band count: inverse CDF of the truncated geometric law.
  const double u = rng.uniform01();
  const double q = std::exp(-cfg.band_count_decay);
  const int span = k_max - cfg.min_bands + 1;
  const double mass = 1.0 - std::pow(q, span);
  int j = static_cast<int>(std::floor(std::log1p(-u * mass) / std::log(q)));
  j = std::clamp(j, 0, span - 1);
  const int k = cfg.min_bands + j;

  // Distinct centers: partial Fisher-Yates over the lattice indices.
  std::vector<int> idx(static_cast<std::size_t>(lattice));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    const auto pick = i + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(lattice - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick)]);
  }
  std::vector<double> centers(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    centers[static_cast<std::size_t>(i)] = cfg.center_min_nm + cfg.center_step_nm * idx[static_cast<std::size_t>(i)];
  std::sort(centers.begin(), centers.end());

  // Widths left to right: the left neighbour's right edge is fixed; half the
  // gap to the right neighbour's center stays reserved for that neighbour.
  SensorSpec spec;
  spec.name = "random";
  spec.bands.reserve(centers.size());
  double prev_upper = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double c = centers[i];
    double limit = cfg.width_max_nm;
    if (i > 0) limit = std::min(limit, 2.0 * (c - prev_upper));
    if (i + 1 < centers.size()) limit = std::min(limit, centers[i + 1] - c);
    const double hi = std::max(limit, cfg.width_min_nm);
    const double w = rng.uniform(cfg.width_min_nm, hi);
    spec.bands.push_back({c, w, 1.0});
    prev_upper = c + 0.5 * w;
  }
  return spec;
}

ClippedSensor sample_usable_sensor(const RandomSensorConfig& cfg, const WavelengthGrid& grid, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    SensorSpec s = sample_random_sensor(cfg, rng);
    const bool any = std::any_of(s.bands.begin(), s.bands.end(), [&](const Band& b) {
      return std::min(b.upper_nm(), grid.end()) - std::max(b.lower_nm(), grid.start()) > 0.0;
    });
    if (any) return clip_to_range(s, grid);
  }
  throw_data("random sensor configuration never overlaps the data range");
}

Dataset augment_dataset(const Dataset& dataset, const SensorSpec& sensor) {
  const SensorSpec s = clip_to_range(sensor, dataset.grid).sensor;
  std::vector<double> centers;
  for (const auto& b : s.bands) centers.push_back(b.center_nm);
  Dataset out{WavelengthGrid::from_points(centers), {}, dataset.class_names};
  out.pixels.reserve(dataset.pixels.size());
  for (const auto& p : dataset.pixels) {
    const SensorSample sample = convolve(p.spectrum, s);
    if (sample.measurements.size() != centers.size()) throw_data("augment: band dropped during convolution");
    out.pixels.push_back({Spectrum(out.grid, sample.measurements), p.class_id, p.pixel_id});
  }
  return out;
}

SensorSpec identity_sensor(const WavelengthGrid& grid, const std::string& name) {
  const auto pts = grid.points();
  SensorSpec spec;
  spec.name = name;
  spec.bands.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double left = i > 0 ? 0.5 * (pts[i - 1] + pts[i]) : pts[0] - 0.5 * (pts[1] - pts[0]);
    const double right =
        i + 1 < pts.size() ? 0.5 * (pts[i] + pts[i + 1]) : pts[i] + 0.5 * (pts[i] - pts[i - 1]);
    spec.bands.push_back({0.5 * (left + right), right - left, 1.0});
  }
  return spec;
}

namespace {

double require_number(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw_data(where + ": missing field '" + key + "'");
  if (!it->is_number()) throw_data(where + ": field '" + std::string(key) + "' must be a number");
  return it->get<double>();
}

}  // namespace

SensorSpec parse_sensor_spec(const std::string& text, const std::string& origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw_data(origin + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) throw_data(origin + ": sensor spec must be a JSON object");
  SensorSpec spec;
  auto name = doc.find("name");
  if (name == doc.end() || !name->is_string()) throw_data(origin + ": field 'name' must be a string");
  spec.name = name->get<std::string>();
  if (auto it = doc.find("allow_overlap"); it != doc.end()) {
    if (!it->is_boolean()) throw_data(origin + ": field 'allow_overlap' must be a boolean");
    spec.allow_overlap = it->get<bool>();
  }
  auto bands = doc.find("bands");
  if (bands == doc.end() || !bands->is_array()) throw_data(origin + ": field 'bands' must be an array");
  for (std::size_t i = 0; i < bands->size(); ++i) {
    const auto& b = (*bands)[i];
    const std::string where = origin + ": bands[" + std::to_string(i) + "]";
    if (!b.is_object()) throw_data(where + " must be an object");
    Band band;
    band.center_nm = require_number(b, "center_nm", where);
    band.fwhm_nm = require_number(b, "fwhm_nm", where);
    band.gain = b.contains("gain") ? require_number(b, "gain", where) : 1.0;
    spec.bands.push_back(band);
  }
  const auto violations = validate_sensor(spec);
  if (!violations.empty()) throw_data(origin + ": invalid sensor: " + describe(violations));
  return spec;
}

SensorSpec load_sensor_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open sensor spec " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_sensor_spec(ss.str(), path.string());
}

std::string sensor_spec_to_json(const SensorSpec& spec) {
  nlohmann::json doc;
  doc["name"] = spec.name;
  if (spec.allow_overlap) doc["allow_overlap"] = true;
  doc["bands"] = nlohmann::json::array();
  for (const Band& b : spec.bands)
    doc["bands"].push_back({{"center_nm", b.center_nm}, {"fwhm_nm", b.fwhm_nm}, {"gain", b.gain}});
  return doc.dump(2);
}

std::vector<SensorSpec> load_sensor_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw_data("sensor directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SensorSpec> out;
  for (const auto& f : files) out.push_back(load_sensor_spec(f));
  if (out.empty()) throw_data("no sensor spec files in " + dir.string());
  return out;
}

}  // namespace usr
