// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

// usr-spectral: command-line front end over the C API.
// Exit codes: 0 ok, 1 usage, 2 data/validation, 3 numerical failure.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "usr_spectral/usr_spectral.h"

namespace {

struct Failure {
  usr_status status;
  std::string where;
  std::string message;
};

void report(const std::string& event, const std::string& message) {
  nlohmann::json line = {{"level", "error"}, {"event", event}, {"message", message}};
  std::cerr << line.dump() << std::endl;
}

void check(usr_status st, const std::string& where) {
  if (st != USR_OK) throw Failure{st, where, usr_last_error()};
}

int exit_code(usr_status st) {
  switch (st) {
    case USR_ERR_USAGE: return 1;
    case USR_ERR_NUMERIC: return 3;
    default: return 2;
  }
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() {
    if (p) Free(p);
  }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Dataset = Handle<usr_dataset, usr_dataset_free>;
using Sensor = Handle<usr_sensor, usr_sensor_free>;
using Config = Handle<usr_config, usr_config_free>;
using Model = Handle<usr_model, usr_model_free>;

void load_config(Config& cfg, const std::string& path, bool desk, const std::vector<std::string>& sets) {
  if (!path.empty()) check(usr_config_load(path.c_str(), cfg.out()), "config");
  else if (desk) check(usr_config_desk(cfg.out()), "config");
  else check(usr_config_default(cfg.out()), "config");
  for (const auto& s : sets) check(usr_config_override(cfg.get(), s.c_str()), "--set " + s);
  check(usr_config_validate(cfg.get()), "config");
}

std::pair<double, double> parse_band(const std::string& text) {
  std::stringstream ss(text);
  double c = 0, w = 0;
  char comma = 0;
  if (!(ss >> c >> comma >> w) || comma != ',' || !ss.eof()) throw Failure{USR_ERR_USAGE, "probe", "--band expects CENTER,FWHM"};
  return {c, w};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensor-independent spectral representations: tokenization, training and evaluation."};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug, info, warn, error or off")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled dataset on the 144-band scene grid");
  std::size_t synth_pixels = 256, synth_classes = 8;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth->add_option("--pixels", synth_pixels, "number of pixels")->capture_default_str();
  synth->add_option("--classes", synth_classes, "number of classes")->capture_default_str();
  synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
  synth->add_option("--out", synth_out, "output CSV")->required();

  // augment
  auto* augment = app.add_subcommand("augment", "View a dataset through a sensor spec or a random sensor");
  std::string aug_input, aug_sensor, aug_out, aug_config;
  std::uint64_t aug_seed = 0;
  augment->add_option("--input", aug_input, "input CSV")->required();
  augment->add_option("--sensor", aug_sensor, "sensor JSON file, or 'random'")->required();
  augment->add_option("--seed", aug_seed, "seed for a random sensor")->capture_default_str();
  augment->add_option("--config", aug_config, "config file supplying random_sensor settings");
  augment->add_option("--out", aug_out, "output CSV (one column per surviving band)")->required();

  // probe
  auto* probe = app.add_subcommand("probe", "Sweep the probe response of one band's unit token");
  std::string probe_band, probe_out, probe_config;
  double probe_from = 350, probe_to = 1050, probe_step = 1;
  usr_encoding_params enc;
  usr_encoding_params_default(&enc);
  probe->add_option("--band", probe_band, "CENTER,FWHM in nm, e.g. 550,10")->required();
  probe->add_option("--out", probe_out, "output CSV (lambda_nm,response)")->required();
  probe->add_option("--from", probe_from, "sweep start (nm)")->capture_default_str();
  probe->add_option("--to", probe_to, "sweep end (nm)")->capture_default_str();
  probe->add_option("--step", probe_step, "sweep step (nm)")->capture_default_str();
  probe->add_option("--sigma", enc.sigma, "encoding frequency base")->capture_default_str();
  probe->add_option("--r", enc.r, "encoding scale")->capture_default_str();
  probe->add_option("--n", enc.n, "encoding dimension")->capture_default_str();
  probe->add_option("--sample-step", enc.sample_step_nm, "band sampling step (nm)")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train the encoder/decoder with random-sensor augmentation");
  std::string train_data, train_config, train_out, train_resume;
  bool train_desk = false;
  std::vector<std::string> train_sets;
  train->add_option("--data", train_data, "dataset CSV")->required();
  train->add_option("--config", train_config, "config JSON (defaults to the full-size configuration)");
  train->add_flag("--desk", train_desk, "start from the reduced desk-scale configuration");
  train->add_option("--set", train_sets, "override, e.g. train.epochs=20 (repeatable)");
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--resume", train_resume, "checkpoint to resume from");

  // eval
  auto* eval = app.add_subcommand("eval", "Reconstruction and embedding-shift reports for a trained model");
  std::string eval_ckpt, eval_data, eval_sensors, eval_out, eval_class_map;
  usr_eval_options eval_opts;
  usr_eval_options_default(&eval_opts);
  bool eval_within = false, eval_all = false;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--data", eval_data, "dataset CSV")->required();
  eval->add_option("--sensors", eval_sensors, "directory of sensor JSON files")->required();
  eval->add_option("--out", eval_out, "output directory")->required();
  eval->add_option("--n-random", eval_opts.n_random, "random sensors in the Random row")->capture_default_str();
  eval->add_flag("--within-denominator", eval_within, "normalize shifts by within-sensor pair distances");
  eval->add_flag("--all-pixels", eval_all, "evaluate every pixel instead of the held-out split");
  eval->add_option("--class-map", eval_class_map, "class map JSON for embedding exports");

  // crossval
  auto* crossval = app.add_subcommand("crossval", "Train and evaluate over several class-balanced splits");
  std::string cv_data, cv_sensors, cv_out, cv_config, cv_class_map;
  int cv_trials = 5;
  bool cv_desk = false, cv_within = false;
  std::vector<std::string> cv_sets;
  usr_eval_options cv_opts;
  usr_eval_options_default(&cv_opts);
  crossval->add_option("--data", cv_data, "dataset CSV")->required();
  crossval->add_option("--sensors", cv_sensors, "directory of sensor JSON files")->required();
  crossval->add_option("--out", cv_out, "output directory")->required();
  crossval->add_option("--trials", cv_trials, "number of splits")->capture_default_str();
  crossval->add_option("--train-config", cv_config, "config JSON");
  crossval->add_flag("--desk", cv_desk, "start from the reduced desk-scale configuration");
  crossval->add_option("--set", cv_sets, "config override (repeatable)");
  crossval->add_option("--n-random", cv_opts.n_random, "random sensors in the Random row")->capture_default_str();
  crossval->add_flag("--within-denominator", cv_within, "normalize shifts by within-sensor pair distances");
  crossval->add_option("--class-map", cv_class_map, "class map JSON for embedding exports");

  // encode
  auto* encode = app.add_subcommand("encode", "Embed every pixel of a dataset seen through one sensor");
  std::string enc_ckpt, enc_input, enc_sensor, enc_out;
  encode->add_option("--checkpoint", enc_ckpt, "checkpoint file")->required();
  encode->add_option("--input", enc_input, "dataset CSV")->required();
  encode->add_option("--sensor", enc_sensor, "sensor JSON file, or 'identity' for the data grid")->required();
  encode->add_option("--out", enc_out, "output CSV (pixel_id,class_id,e1..)")->required();

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic gradients with central finite differences");
  bool gc_tiny = false;
  std::string gc_config, gc_report;
  std::uint64_t gc_seed = 0;
  std::size_t gc_samples = 200;
  double gc_tolerance = 1e-4;
  gradcheck->add_flag("--tiny", gc_tiny, "use the tiny model configuration");
  gradcheck->add_option("--config", gc_config, "config JSON whose model is checked");
  gradcheck->add_option("--seed", gc_seed, "seed")->capture_default_str();
  gradcheck->add_option("--samples", gc_samples, "parameters to check")->capture_default_str();
  gradcheck->add_option("--tolerance", gc_tolerance, "maximum relative error")->capture_default_str();
  gradcheck->add_option("--report", gc_report, "CSV of every checked entry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    check(usr_log_set_level(log_level.c_str()), "--log-level");

    if (*synth) {
      Dataset ds;
      check(usr_dataset_synthetic(synth_pixels, synth_classes, synth_seed, ds.out()), "synth");
      check(usr_dataset_save(ds.get(), synth_out.c_str()), "synth");
    } else if (*augment) {
      Dataset ds, out;
      Sensor sensor;
      check(usr_dataset_load(aug_input.c_str(), ds.out()), "augment --input");
      if (aug_sensor == "random") {
        Config cfg;
        load_config(cfg, aug_config, false, {});
        check(usr_sensor_random(cfg.get(), ds.get(), aug_seed, sensor.out()), "augment --sensor random");
      } else {
        check(usr_sensor_load(aug_sensor.c_str(), sensor.out()), "augment --sensor");
      }
      check(usr_dataset_augment(ds.get(), sensor.get(), out.out()), "augment");
      check(usr_dataset_save(out.get(), aug_out.c_str()), "augment --out");
    } else if (*probe) {
      const auto [center, fwhm] = parse_band(probe_band);
      check(usr_probe_csv(&enc, center, fwhm, probe_from, probe_to, probe_step, probe_out.c_str()), "probe");
    } else if (*train) {
      Dataset ds;
      Config cfg;
      load_config(cfg, train_config, train_desk, train_sets);
      check(usr_dataset_load(train_data.c_str(), ds.out()), "train --data");
      usr_train_summary summary;
      check(usr_train(ds.get(), cfg.get(), train_out.c_str(), train_resume.empty() ? nullptr : train_resume.c_str(),
                      &summary),
            "train");
      nlohmann::json done = {{"epochs", summary.epochs},
                             {"final_train_loss", summary.final_train_loss},
                             {"final_lr", summary.final_lr},
                             {"train_pixels", summary.train_pixels},
                             {"test_pixels", summary.test_pixels}};
      std::cout << done.dump() << std::endl;
    } else if (*eval) {
      Model model;
      Dataset ds;
      check(usr_model_load(eval_ckpt.c_str(), model.out()), "eval --checkpoint");
      check(usr_dataset_load(eval_data.c_str(), ds.out()), "eval --data");
      eval_opts.within_denominator = eval_within ? 1 : 0;
      eval_opts.all_pixels = eval_all ? 1 : 0;
      eval_opts.class_map = eval_class_map.empty() ? nullptr : eval_class_map.c_str();
      check(usr_evaluate(model.get(), ds.get(), eval_sensors.c_str(), eval_out.c_str(), &eval_opts), "eval");
    } else if (*crossval) {
      Dataset ds;
      Config cfg;
      load_config(cfg, cv_config, cv_desk, cv_sets);
      check(usr_dataset_load(cv_data.c_str(), ds.out()), "crossval --data");
      cv_opts.within_denominator = cv_within ? 1 : 0;
      cv_opts.class_map = cv_class_map.empty() ? nullptr : cv_class_map.c_str();
      check(usr_crossval(ds.get(), cfg.get(), cv_sensors.c_str(), cv_out.c_str(), cv_trials, &cv_opts), "crossval");
    } else if (*encode) {
      Model model;
      Dataset ds;
      Sensor sensor;
      check(usr_model_load(enc_ckpt.c_str(), model.out()), "encode --checkpoint");
      check(usr_dataset_load(enc_input.c_str(), ds.out()), "encode --input");
      if (enc_sensor == "identity") check(usr_sensor_identity(ds.get(), sensor.out()), "encode --sensor");
      else check(usr_sensor_load(enc_sensor.c_str(), sensor.out()), "encode --sensor");
      check(usr_model_encode_csv(model.get(), ds.get(), sensor.get(), enc_out.c_str()), "encode");
    } else if (*gradcheck) {
      if (gc_tiny == !gc_config.empty()) throw Failure{USR_ERR_USAGE, "gradcheck", "needs exactly one of --tiny, --config"};
      Config cfg;
      if (!gc_tiny) load_config(cfg, gc_config, false, {});
      usr_gradcheck_result res;
      check(usr_gradcheck(gc_tiny ? nullptr : cfg.get(), gc_seed, gc_samples,
                          gc_report.empty() ? nullptr : gc_report.c_str(), &res),
            "gradcheck");
      const bool ok = res.max_relative_error <= gc_tolerance;
      nlohmann::json out = {{"max_relative_error", res.max_relative_error},
                            {"tolerance", gc_tolerance},
                            {"checked", res.checked},
                            {"parameters", res.parameters},
                            {"loss", res.loss},
                            {"pass", ok}};
      std::cout << out.dump() << std::endl;
      if (!ok) throw Failure{USR_ERR_NUMERIC, "gradcheck", "gradient check exceeded tolerance"};
    }
  } catch (const Failure& f) {
    report(f.where, f.message);
    return exit_code(f.status);
  }
  return 0;
}
