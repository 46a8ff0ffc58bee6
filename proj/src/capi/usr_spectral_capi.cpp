// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include "usr_spectral/usr_spectral.h"

#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <new>
#include <optional>
#include <string>

#include "core/checkpoint.hpp"
#include "core/config.hpp"
#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/eval.hpp"
#include "core/log.hpp"
#include "core/model.hpp"
#include "core/sensors.hpp"
#include "core/training.hpp"
#include "core/usr.hpp"

struct usr_dataset {
  usr::Dataset data;
};
struct usr_sensor {
  usr::SensorSpec spec;
};
struct usr_config {
  usr::GlobalConfig cfg;
};
struct usr_model {
  usr::Checkpoint ckpt;
  usr::ModelReconstructor rec;
};

namespace {

thread_local std::string g_last_error;

usr_status fail(usr_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class F>
usr_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return USR_OK;
  } catch (const usr::Error& e) {
    return fail(static_cast<usr_status>(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(USR_ERR_INTERNAL, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(USR_ERR_DATA, e.what());
  } catch (const std::exception& e) {
    return fail(USR_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) usr::throw_usage(std::string("null argument: ") + what);
}

usr::EncodingParams to_params(const usr_encoding_params* p) {
  require(p != nullptr, "params");
  usr::EncodingParams out{p->sigma, p->r, p->n, p->sample_step_nm};
  out.validate();
  return out;
}

usr::Spectrum make_spectrum(const double* wl, const double* values, size_t n) {
  require(wl && values, "wavelengths/values");
  return usr::Spectrum(usr::WavelengthGrid::from_points({wl, wl + n}), {values, values + n});
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) usr::throw_data("cannot write " + path.string());
  out << text;
  if (!out) usr::throw_data("failed writing " + path.string());
}

std::string file_safe(const std::string& name) {
  std::string out = name;
  for (char& c : out)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) c = '_';
  return out;
}

usr::ShiftDenominator denominator(const usr_eval_options& o) {
  return o.within_denominator ? usr::ShiftDenominator::WithinPairs : usr::ShiftDenominator::CrossPairs;
}

usr::ClassMap class_map_for(const usr::Dataset& ds, const usr_eval_options& o) {
  if (o.class_map) return usr::load_class_map(o.class_map);
  usr::ClassMap map;
  map.class_names = ds.class_names;
  return map;
}

void write_embeddings(const usr::Reconstructor& rec, const std::vector<usr::LabeledPixel>& pixels,
                      const std::vector<usr::SensorSpec>& sensors, const usr::ClassMap& map,
                      const std::filesystem::path& out_dir) {
  for (const auto& s : sensors)
    write_file(out_dir / ("embeddings_" + file_safe(s.name) + ".csv"), usr::export_embeddings(rec, pixels, s, map));
}

}  // namespace

extern "C" {

const char* usr_version(void) { return "0.1.0"; }
const char* usr_last_error(void) { return g_last_error.c_str(); }
void usr_string_free(char* s) { delete[] s; }

usr_status usr_log_set_level(const char* level) {
  return guarded([&] {
    require(level, "level");
    const std::string l = level;
    if (l == "debug") usr::log::set_level(usr::log::Level::Debug);
    else if (l == "info") usr::log::set_level(usr::log::Level::Info);
    else if (l == "warn") usr::log::set_level(usr::log::Level::Warn);
    else if (l == "error") usr::log::set_level(usr::log::Level::Error);
    else if (l == "off") usr::log::set_level(usr::log::Level::Off);
    else usr::throw_usage("unknown log level '" + l + "'");
  });
}

void usr_encoding_params_default(usr_encoding_params* out) {
  if (!out) return;
  const usr::EncodingParams d;
  *out = {d.sigma, d.r, d.n, d.sample_step_nm};
}

usr_status usr_sinusoid_encode(const usr_encoding_params* params, double lambda_nm, double* out) {
  return guarded([&] {
    require(out, "out");
    const auto v = usr::sinusoid_encode(lambda_nm, to_params(params));
    std::copy(v.begin(), v.end(), out);
  });
}

usr_status usr_band_token(const usr_encoding_params* params, double measurement, double center_nm, double fwhm_nm,
                          double gain, double* out) {
  return guarded([&] {
    require(out, "out");
    const auto v = usr::usr_encode(measurement, usr::Band{center_nm, fwhm_nm, gain}, to_params(params));
    std::copy(v.begin(), v.end(), out);
  });
}

usr_status usr_band_probe(const usr_encoding_params* params, const double* token, double lambda_nm, double* out) {
  return guarded([&] {
    require(token && out, "token/out");
    const auto p = to_params(params);
    *out = usr::band_probe(std::span<const double>(token, static_cast<size_t>(p.n)), lambda_nm, p);
  });
}

usr_status usr_probe_csv(const usr_encoding_params* params, double center_nm, double fwhm_nm, double from_nm,
                         double to_nm, double step_nm, const char* path) {
  return guarded([&] {
    require(path, "path");
    const usr::SinusoidEncoder enc(to_params(params));
    const usr::Band band{center_nm, fwhm_nm, 1.0};
    if (!(fwhm_nm > 0) || !std::isfinite(center_nm)) usr::throw_usage("probe: band needs a finite center and fwhm > 0");
    const auto token = usr::band_unit_token(band, enc);
    std::string csv = "lambda_nm,response\n";
    for (const auto& p : usr::probe_sweep(token, from_nm, to_nm, step_nm, enc))
      csv += usr::format_double(p.lambda_nm) + "," + usr::format_double(p.response) + "\n";
    write_file(path, csv);
  });
}

usr_status usr_dataset_load(const char* path, usr_dataset** out) {
  return guarded([&] {
    require(path && out, "path/out");
    *out = new usr_dataset{usr::load_dataset(path)};
  });
}

usr_status usr_dataset_synthetic(size_t pixels, size_t classes, uint64_t seed, usr_dataset** out) {
  return guarded([&] {
    require(out, "out");
    *out = new usr_dataset{usr::generate_synthetic(pixels, classes, usr::default_scene_grid(), seed)};
  });
}

usr_status usr_dataset_save(const usr_dataset* ds, const char* path) {
  return guarded([&] {
    require(ds && path, "dataset/path");
    usr::save_dataset(ds->data, path);
  });
}

usr_status usr_dataset_shape(const usr_dataset* ds, size_t* pixels, size_t* bands, size_t* classes) {
  return guarded([&] {
    require(ds, "dataset");
    if (pixels) *pixels = ds->data.pixels.size();
    if (bands) *bands = ds->data.grid.size();
    if (classes) *classes = ds->data.class_count();
  });
}

usr_status usr_dataset_wavelengths(const usr_dataset* ds, double* out, size_t capacity) {
  return guarded([&] {
    require(ds && out, "dataset/out");
    const auto pts = ds->data.grid.points();
    if (capacity < pts.size()) usr::throw_usage("wavelength buffer too small");
    std::copy(pts.begin(), pts.end(), out);
  });
}

usr_status usr_dataset_pixel(const usr_dataset* ds, size_t index, double* values, size_t capacity, int* class_id,
                             long long* pixel_id) {
  return guarded([&] {
    require(ds, "dataset");
    if (index >= ds->data.pixels.size()) usr::throw_usage("pixel index out of range");
    const auto& p = ds->data.pixels[index];
    if (values) {
      if (capacity < p.spectrum.size()) usr::throw_usage("value buffer too small");
      std::copy(p.spectrum.values().begin(), p.spectrum.values().end(), values);
    }
    if (class_id) *class_id = p.class_id;
    if (pixel_id) *pixel_id = p.pixel_id;
  });
}

usr_status usr_dataset_augment(const usr_dataset* ds, const usr_sensor* sensor, usr_dataset** out) {
  return guarded([&] {
    require(ds && sensor && out, "dataset/sensor/out");
    *out = new usr_dataset{usr::augment_dataset(ds->data, sensor->spec)};
  });
}

void usr_dataset_free(usr_dataset* ds) { delete ds; }

usr_status usr_sensor_load(const char* path, usr_sensor** out) {
  return guarded([&] {
    require(path && out, "path/out");
    *out = new usr_sensor{usr::load_sensor_spec(path)};
  });
}

usr_status usr_sensor_create(const char* name, const double* centers, const double* fwhms, const double* gains,
                             size_t count, int allow_overlap, usr_sensor** out) {
  return guarded([&] {
    require(centers && fwhms && out, "centers/fwhms/out");
    usr::SensorSpec s;
    s.name = name ? name : "sensor";
    s.allow_overlap = allow_overlap != 0;
    for (size_t i = 0; i < count; ++i) s.bands.push_back({centers[i], fwhms[i], gains ? gains[i] : 1.0});
    const auto violations = usr::validate_sensor(s);
    if (!violations.empty()) usr::throw_data("sensor '" + s.name + "': " + usr::describe(violations));
    *out = new usr_sensor{std::move(s)};
  });
}

usr_status usr_sensor_identity(const usr_dataset* ds, usr_sensor** out) {
  return guarded([&] {
    require(ds && out, "dataset/out");
    *out = new usr_sensor{usr::identity_sensor(ds->data.grid)};
  });
}

usr_status usr_sensor_random(const usr_config* cfg, const usr_dataset* ds, uint64_t seed, usr_sensor** out) {
  return guarded([&] {
    require(cfg && out, "config/out");
    usr::Rng rng(seed);
    usr::SensorSpec s = ds ? usr::sample_usable_sensor(cfg->cfg.random_sensor, ds->data.grid, rng).sensor
                           : usr::sample_random_sensor(cfg->cfg.random_sensor, rng);
    s.name = "random_" + std::to_string(seed);
    *out = new usr_sensor{std::move(s)};
  });
}

usr_status usr_sensor_band_count(const usr_sensor* s, size_t* out) {
  return guarded([&] {
    require(s && out, "sensor/out");
    *out = s->spec.bands.size();
  });
}

usr_status usr_sensor_band(const usr_sensor* s, size_t index, double* center_nm, double* fwhm_nm, double* gain) {
  return guarded([&] {
    require(s, "sensor");
    if (index >= s->spec.bands.size()) usr::throw_usage("band index out of range");
    const auto& b = s->spec.bands[index];
    if (center_nm) *center_nm = b.center_nm;
    if (fwhm_nm) *fwhm_nm = b.fwhm_nm;
    if (gain) *gain = b.gain;
  });
}

usr_status usr_sensor_to_json(const usr_sensor* s, char** out) {
  return guarded([&] {
    require(s && out, "sensor/out");
    *out = dup_string(usr::sensor_spec_to_json(s->spec));
  });
}

usr_status usr_convolve(const double* wl, const double* values, size_t n, const usr_sensor* s, double* out,
                        size_t* count) {
  return guarded([&] {
    require(s && out && count, "sensor/out/count");
    const auto sample = usr::convolve(make_spectrum(wl, values, n), s->spec);
    std::copy(sample.measurements.begin(), sample.measurements.end(), out);
    *count = sample.measurements.size();
  });
}

void usr_sensor_free(usr_sensor* s) { delete s; }

usr_status usr_config_default(usr_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new usr_config{usr::default_config()};
  });
}

usr_status usr_config_desk(usr_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new usr_config{usr::desk_config()};
  });
}

usr_status usr_config_load(const char* path, usr_config** out) {
  return guarded([&] {
    require(path && out, "path/out");
    *out = new usr_config{usr::load_config(path)};
  });
}

usr_status usr_config_override(usr_config* cfg, const char* assignment) {
  return guarded([&] {
    require(cfg && assignment, "config/assignment");
    usr::apply_override(cfg->cfg, assignment);
  });
}

usr_status usr_config_validate(const usr_config* cfg) {
  return guarded([&] {
    require(cfg, "config");
    cfg->cfg.validate();
  });
}

usr_status usr_config_to_json(const usr_config* cfg, char** out) {
  return guarded([&] {
    require(cfg && out, "config/out");
    *out = dup_string(usr::config_to_json(cfg->cfg).dump(2));
  });
}

void usr_config_free(usr_config* cfg) { delete cfg; }

usr_status usr_train(const usr_dataset* ds, const usr_config* cfg, const char* out_dir, const char* resume_path,
                     usr_train_summary* summary) {
  return guarded([&] {
    require(ds && cfg && out_dir, "dataset/config/out_dir");
    usr::TrainOptions opts;
    if (resume_path) opts.resume = resume_path;
    const auto result = usr::run_training(ds->data, cfg->cfg, out_dir, opts);
    if (summary) {
      const auto& st = result.final_state;
      summary->epochs = st.epoch;
      summary->final_train_loss = st.history.empty() ? std::nan("") : st.history.back().train_loss;
      summary->final_val_loss = st.history.empty() ? std::nan("") : st.history.back().val_loss;
      summary->final_lr = st.scheduler.lr;
      summary->train_pixels = st.train_ids.size();
      summary->test_pixels = st.test_ids.size();
    }
  });
}

usr_status usr_model_load(const char* path, usr_model** out) {
  return guarded([&] {
    require(path && out, "path/out");
    usr::Checkpoint ckpt = usr::load_checkpoint(path);
    usr::Model model = ckpt.model();
    *out = new usr_model{std::move(ckpt), usr::ModelReconstructor(std::move(model))};
  });
}

usr_status usr_model_embed_dim(const usr_model* m, size_t* out) {
  return guarded([&] {
    require(m && out, "model/out");
    *out = static_cast<size_t>(m->ckpt.config.model.encoder.embed_dim);
  });
}

usr_status usr_model_embed(const usr_model* m, const double* wl, const double* values, size_t n, const usr_sensor* s,
                           double* out) {
  return guarded([&] {
    require(m && s && out, "model/sensor/out");
    const usr::RowVec e = m->rec.model().embed(make_spectrum(wl, values, n), s->spec);
    std::copy(e.data(), e.data() + e.size(), out);
  });
}

usr_status usr_model_reconstruct(const usr_model* m, const double* wl, const double* values, size_t n,
                                 const usr_sensor* s, double* out) {
  return guarded([&] {
    require(m && s && out, "model/sensor/out");
    const usr::Spectrum y = m->rec.model().forward(make_spectrum(wl, values, n), s->spec);
    std::copy(y.values().begin(), y.values().end(), out);
  });
}

usr_status usr_model_encode_csv(const usr_model* m, const usr_dataset* ds, const usr_sensor* s, const char* path) {
  return guarded([&] {
    require(m && ds && s && path, "model/dataset/sensor/path");
    const auto& pixels = ds->data.pixels;
    const usr::Mat emb = m->rec.embed(usr::spectra_of(pixels), s->spec);
    std::string csv = "pixel_id,class_id";
    for (Eigen::Index d = 0; d < emb.cols(); ++d) csv += ",e" + std::to_string(d + 1);
    csv += "\n";
    for (size_t i = 0; i < pixels.size(); ++i) {
      csv += std::to_string(pixels[i].pixel_id) + "," + std::to_string(pixels[i].class_id);
      for (Eigen::Index d = 0; d < emb.cols(); ++d)
        csv += "," + usr::format_double(emb(static_cast<Eigen::Index>(i), d));
      csv += "\n";
    }
    write_file(path, csv);
  });
}

void usr_model_free(usr_model* m) { delete m; }

void usr_eval_options_default(usr_eval_options* out) {
  if (!out) return;
  *out = {usr::kDefaultRandomSensors, 0, 0, nullptr};
}

usr_status usr_evaluate(const usr_model* m, const usr_dataset* ds, const char* sensors_dir, const char* out_dir,
                        const usr_eval_options* options) {
  return guarded([&] {
    require(m && ds && sensors_dir && out_dir, "model/dataset/sensors_dir/out_dir");
    usr_eval_options o;
    usr_eval_options_default(&o);
    if (options) o = *options;
    const auto sensors = usr::load_sensor_dir(sensors_dir);
    if (sensors.empty()) usr::throw_data(std::string("no sensor files in ") + sensors_dir);
    std::vector<usr::LabeledPixel> pixels =
        (o.all_pixels || m->ckpt.test_ids.empty()) ? ds->data.pixels : ds->data.select(m->ckpt.test_ids);
    if (pixels.empty()) usr::throw_data("evaluation: no test pixels (check that the data matches the checkpoint)");
    const auto spectra = usr::spectra_of(pixels);
    std::filesystem::create_directories(out_dir);
    const auto recon =
        usr::evaluate_reconstruction(m->rec, spectra, sensors, m->ckpt.config.random_sensor, o.n_random);
    write_file(std::filesystem::path(out_dir) / "recon_report.csv", usr::format_recon_report(recon));
    const auto shift = usr::evaluate_shift(m->rec, spectra, sensors, denominator(o));
    write_file(std::filesystem::path(out_dir) / "shift_report.csv", usr::format_shift_report(shift));
    write_embeddings(m->rec, pixels, sensors, class_map_for(ds->data, o), out_dir);
  });
}

usr_status usr_crossval(const usr_dataset* ds, const usr_config* cfg, const char* sensors_dir, const char* out_dir,
                        int trials, const usr_eval_options* options) {
  return guarded([&] {
    require(ds && cfg && sensors_dir && out_dir, "dataset/config/sensors_dir/out_dir");
    usr_eval_options o;
    usr_eval_options_default(&o);
    if (options) o = *options;
    const auto sensors = usr::load_sensor_dir(sensors_dir);
    if (sensors.empty()) usr::throw_data(std::string("no sensor files in ") + sensors_dir);
    const std::filesystem::path root(out_dir);
    std::filesystem::create_directories(root);
    const usr::GlobalConfig& gc = cfg->cfg;
    usr::CrossValidationOptions cv;
    cv.n_trials = trials;
    cv.seed = gc.train.seed;
    cv.train_fraction = gc.train.train_fraction;
    cv.random_cfg = gc.random_sensor;
    cv.n_random = o.n_random;
    cv.denom = denominator(o);
    const usr::ClassMap map = class_map_for(ds->data, o);
    const usr::Trainer trainer = [&](const usr::Dataset& data, const usr::SplitSpec& split) {
      const auto dir = root / ("trial_" + std::to_string(split.trial_index));
      usr::TrainOptions opts;
      opts.split = split;
      auto result = usr::run_training(data, gc, dir, opts);
      auto rec = std::make_unique<usr::ModelReconstructor>(result.final_state.model());
      write_embeddings(*rec, data.select(split.test_ids), sensors, map, dir);
      return std::unique_ptr<usr::Reconstructor>(std::move(rec));
    };
    const auto result = usr::cross_validate(ds->data, sensors, trainer, cv);
    for (size_t t = 0; t < result.per_trial_recon.size(); ++t) {
      const auto dir = root / ("trial_" + std::to_string(t));
      write_file(dir / "recon_report.csv", usr::format_recon_report(result.per_trial_recon[t]));
      write_file(dir / "shift_report.csv", usr::format_shift_report(result.per_trial_shift[t]));
    }
    write_file(root / "recon_report.csv", usr::format_recon_report(result.recon));
    write_file(root / "shift_report.csv", usr::format_shift_report(result.shift));
  });
}

usr_status usr_gradcheck(const usr_config* cfg, uint64_t seed, size_t samples, const char* report_path,
                         usr_gradcheck_result* out) {
  return guarded([&] {
    const usr::ModelConfig model_cfg = cfg ? cfg->cfg.model : usr::tiny_model_config();
    const usr::RandomSensorConfig sensor_cfg = cfg ? cfg->cfg.random_sensor : usr::RandomSensorConfig{};
    const auto report = usr::synthetic_gradient_check(model_cfg, sensor_cfg, seed, samples);
    if (report_path) {
      std::string csv = "tensor,row,col,analytic,numeric,relative_error\n";
      for (const auto& e : report.entries)
        csv += e.tensor + "," + std::to_string(e.row) + "," + std::to_string(e.col) + "," +
               usr::format_double(e.analytic) + "," + usr::format_double(e.numeric) + "," +
               usr::format_double(e.relative_error) + "\n";
      write_file(report_path, csv);
    }
    if (out) *out = {report.max_relative_error, report.loss, report.entries.size(), report.parameter_count};
  });
}

}  // extern "C"
