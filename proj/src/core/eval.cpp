// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/log.hpp"
#include "core/metrics.hpp"
#include "core/parallel.hpp"
#include "json.hpp"

namespace usr {

namespace {

const WavelengthGrid& common_grid(const std::vector<Spectrum>& spectra) {
  if (spectra.empty()) throw_data("evaluation: empty pixel set");
  const WavelengthGrid& g = spectra.front().grid();
  for (const auto& s : spectra)
    if (!(s.grid() == g)) throw_data("evaluation: pixels must share one wavelength grid");
  return g;
}

SensorSpec clipped(const SensorSpec& sensor, const WavelengthGrid& grid) { return clip_to_range(sensor, grid).sensor; }

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_stdev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double mean_dissimilarity(const Reconstructor& model, const std::vector<Spectrum>& spectra, const SensorSpec& sensor) {
  const Mat rec = model.reconstruct(spectra, sensor);
  std::vector<double> d(spectra.size());
  parallel_for(spectra.size(), [&](std::size_t i) {
    const auto x = spectra[i].values();
    const RowVec y = rec.row(static_cast<Eigen::Index>(i));
    d[i] = cosine_dissimilarity(x, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
  });
  // Fixed-order sum keeps the result independent of the worker count.
  return mean_of(d);
}

}  // namespace

std::vector<Spectrum> spectra_of(const std::vector<LabeledPixel>& pixels) {
  std::vector<Spectrum> out;
  out.reserve(pixels.size());
  for (const auto& p : pixels) out.push_back(p.spectrum);
  return out;
}

Mat ModelReconstructor::embed(const std::vector<Spectrum>& spectra, const SensorSpec& sensor) const {
  const WavelengthGrid& grid = common_grid(spectra);
  const SensorSpec s = clipped(sensor, grid);
  const Mat unit = model_.unit_tokens(s);
  Mat out(static_cast<Eigen::Index>(spectra.size()), model_.config().encoder.embed_dim);
  parallel_for(spectra.size(), [&](std::size_t i) {
    out.row(static_cast<Eigen::Index>(i)) = model_.encode(model_.tokens(convolve(spectra[i], s), unit));
  });
  return out;
}

Mat ModelReconstructor::reconstruct(const std::vector<Spectrum>& spectra, const SensorSpec& sensor) const {
  const WavelengthGrid& grid = common_grid(spectra);
  const Mat trunk = model_.trunk_output(model_.trunk_features(grid.points()));
  return model_.decode_batch(embed(spectra, sensor), trunk);
}

std::vector<ReconRow> evaluate_reconstruction(const Reconstructor& model, const std::vector<Spectrum>& test_pixels,
                                              const std::vector<SensorSpec>& sensors,
                                              const RandomSensorConfig& random_cfg, int n_random) {
  const WavelengthGrid& grid = common_grid(test_pixels);
  std::vector<ReconRow> rows;
  if (n_random > 0) {
    Rng rng(random_cfg.seed);
    std::vector<double> scores, bands;
    for (int i = 0; i < n_random; ++i) {
      const SensorSpec s = sample_usable_sensor(random_cfg, grid, rng).sensor;
      bands.push_back(static_cast<double>(s.bands.size()));
      scores.push_back(mean_dissimilarity(model, test_pixels, s));
    }
    rows.push_back({kRandomRowName, mean_of(bands), mean_of(scores), 0.0, 1});
  }
  for (const auto& sensor : sensors) {
    const SensorSpec s = clipped(sensor, grid);
    rows.push_back({sensor.name, static_cast<double>(s.bands.size()), mean_dissimilarity(model, test_pixels, s), 0.0, 1});
    log::info("recon_eval", {{"sensor", sensor.name}, {"bands", s.bands.size()}, {"mean", rows.back().mean}});
  }
  return rows;
}

double relative_pixel_shift(const Mat& a, const Mat& b, ShiftDenominator denom) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw_data("relative_pixel_shift: embedding sets differ in shape");
  const Eigen::Index n = a.rows();
  if (n < 2) throw_data("relative_pixel_shift: need at least 2 pixels");
  double num = 0;
  for (Eigen::Index i = 0; i < n; ++i) num += (a.row(i) - b.row(i)).norm();
  num /= static_cast<double>(n);
  double den = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (denom == ShiftDenominator::CrossPairs) {
        den += (a.row(i) - b.row(j)).norm();
      } else {
        den += 0.5 * ((a.row(i) - a.row(j)).norm() + (b.row(i) - b.row(j)).norm());
      }
    }
  }
  den /= static_cast<double>(n * (n - 1));
  if (!(den > 0)) throw_numeric("relative_pixel_shift: all embeddings coincide (zero denominator)");
  return num / den;
}

std::vector<ShiftRow> evaluate_shift(const Reconstructor& model, const std::vector<Spectrum>& test_pixels,
                                     const std::vector<SensorSpec>& sensors, ShiftDenominator denom) {
  std::vector<Mat> emb;
  emb.reserve(sensors.size());
  for (const auto& s : sensors) emb.push_back(model.embed(test_pixels, s));
  std::vector<ShiftRow> rows;
  for (std::size_t i = 0; i < sensors.size(); ++i)
    for (std::size_t j = i + 1; j < sensors.size(); ++j)
      rows.push_back({sensors[i].name, sensors[j].name, relative_pixel_shift(emb[i], emb[j], denom), 0.0, 1});
  return rows;
}

CrossValidationResult cross_validate(const Dataset& dataset, const std::vector<SensorSpec>& sensors,
                                     const Trainer& trainer, const CrossValidationOptions& options) {
  if (options.n_trials < 1) throw_usage("crossval: trials must be >= 1");
  if (dataset.labeled_count() == 0) throw_data("crossval: dataset has no class labels");
  CrossValidationResult result;
  for (int t = 0; t < options.n_trials; ++t) {
    const std::uint64_t split_seed = options.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(t + 1);
    SplitSpec split = class_balanced_split(dataset, split_seed, options.train_fraction, t);
    log::info("crossval_trial", {{"trial", t}, {"train", split.train_ids.size()}, {"test", split.test_ids.size()}});
    const auto model = trainer(dataset, split);
    if (!model) throw_data("crossval: trainer returned no model");
    const auto test = spectra_of(dataset.select(split.test_ids));
    result.per_trial_recon.push_back(
        evaluate_reconstruction(*model, test, sensors, options.random_cfg, options.n_random));
    result.per_trial_shift.push_back(evaluate_shift(*model, test, sensors, options.denom));
    result.splits.push_back(std::move(split));
  }
  const auto n = static_cast<std::size_t>(options.n_trials);
  result.recon = result.per_trial_recon.front();
  for (std::size_t r = 0; r < result.recon.size(); ++r) {
    std::vector<double> means, bands;
    for (std::size_t t = 0; t < n; ++t) {
      means.push_back(result.per_trial_recon[t][r].mean);
      bands.push_back(result.per_trial_recon[t][r].bands);
    }
    result.recon[r] = {result.recon[r].sensor, mean_of(bands), mean_of(means), sample_stdev(means), options.n_trials};
  }
  result.shift = result.per_trial_shift.front();
  for (std::size_t r = 0; r < result.shift.size(); ++r) {
    std::vector<double> vals;
    for (std::size_t t = 0; t < n; ++t) vals.push_back(result.per_trial_shift[t][r].mean);
    result.shift[r].mean = mean_of(vals);
    result.shift[r].stdev = sample_stdev(vals);
    result.shift[r].trials = options.n_trials;
  }
  return result;
}

std::string ClassMap::name_of(int class_id) const {
  if (class_id < 0) return "";
  if (static_cast<std::size_t>(class_id) < class_names.size()) return class_names[static_cast<std::size_t>(class_id)];
  return "class_" + std::to_string(class_id);
}

std::optional<std::string> ClassMap::merged(int class_id) const {
  const std::string name = name_of(class_id);
  if (std::find(excluded.begin(), excluded.end(), name) != excluded.end()) return std::nullopt;
  const auto it = merge.find(name);
  return it == merge.end() ? name : it->second;
}

ClassMap parse_class_map(const std::string& text, const std::string& origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_data(origin + ": invalid JSON: " + e.what());
  }
  ClassMap map;
  try {
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      if (it.key() == "classes") {
        map.class_names = it.value().get<std::vector<std::string>>();
      } else if (it.key() == "merge") {
        for (auto m = it.value().begin(); m != it.value().end(); ++m) {
          for (const auto& member : m.value()) map.merge[member.get<std::string>()] = m.key();
        }
      } else if (it.key() == "exclude") {
        map.excluded = it.value().get<std::vector<std::string>>();
      } else {
        throw_data(origin + ": unknown key '" + it.key() + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw_data(origin + ": malformed class map: " + e.what());
  }
  return map;
}

ClassMap load_class_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open class map " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_class_map(ss.str(), path.string());
}

std::string export_embeddings(const Reconstructor& model, const std::vector<LabeledPixel>& pixels,
                              const SensorSpec& sensor, const ClassMap& class_map) {
  std::vector<LabeledPixel> kept;
  std::vector<std::string> merged;
  for (const auto& p : pixels) {
    if (!p.labeled()) {
      kept.push_back(p);
      merged.emplace_back();
      continue;
    }
    if (auto m = class_map.merged(p.class_id)) {
      kept.push_back(p);
      merged.push_back(*m);
    }
  }
  if (kept.empty()) throw_data("export_embeddings: no pixels left after class exclusion");
  const Mat emb = model.embed(spectra_of(kept), sensor);
  std::string out = "pixel_id,class_id,merged_class";
  for (Eigen::Index d = 0; d < emb.cols(); ++d) out += ",e" + std::to_string(d + 1);
  out += "\n";
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out += std::to_string(kept[i].pixel_id) + "," + std::to_string(kept[i].class_id) + "," + merged[i];
    for (Eigen::Index d = 0; d < emb.cols(); ++d) out += "," + format_double(emb(static_cast<Eigen::Index>(i), d));
    out += "\n";
  }
  return out;
}

std::string format_recon_report(const std::vector<ReconRow>& rows) {
  std::string out = "sensor,bands,mean_cos_dissimilarity,stdev,trials\n";
  for (const auto& r : rows)
    out += r.sensor + "," + format_double(r.bands) + "," + format_double(r.mean) + "," + format_double(r.stdev) + "," +
           std::to_string(r.trials) + "\n";
  return out;
}

std::string format_shift_report(const std::vector<ShiftRow>& rows) {
  std::string out = "sensor_a,sensor_b,relative_pixel_shift,stdev,trials\n";
  for (const auto& r : rows)
    out += r.sensor_a + "," + r.sensor_b + "," + format_double(r.mean) + "," + format_double(r.stdev) + "," +
           std::to_string(r.trials) + "\n";
  return out;
}

}  // namespace usr
