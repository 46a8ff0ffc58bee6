// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "core/error.hpp"
#include "core/log.hpp"
#include "core/sensors.hpp"

namespace usr {

TrainingSet::TrainingSet(const Model& model, const WavelengthGrid& g, const std::vector<LabeledPixel>& pixels)
    : grid(g) {
  spectra.reserve(pixels.size());
  targets.resize(static_cast<Eigen::Index>(pixels.size()), static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const auto v = pixels[i].spectrum.values();
    if (!(pixels[i].spectrum.grid() == g)) throw_data("training pixels must share one wavelength grid");
    targets.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const RowVec>(v.data(), static_cast<Eigen::Index>(v.size()));
    spectra.push_back(pixels[i].spectrum);
  }
  trunk_features = model.trunk_features(g.points());
}

double train_epoch(Model& model, AdamState& adam, const TrainingSet& data, const TrainConfig& cfg,
                   const RandomSensorConfig& sensor_cfg, double lr, Rng& rng, DivergenceSnapshot* snapshot) {
  const std::size_t n = data.size();
  if (n == 0) throw_data("train_epoch: empty training set");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_index(i + 1)]);

  ModelWeights grads = zeros_like(model.weights());
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  double weighted = 0.0;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t count = std::min(batch_size, n - start);
    const std::size_t n_sensors = cfg.per_sample_sensors ? count : static_cast<std::size_t>(cfg.sensors_per_batch);
    std::vector<SensorSpec> sensors;
    std::vector<Mat> units;
    sensors.reserve(n_sensors);
    for (std::size_t s = 0; s < n_sensors; ++s) {
      sensors.push_back(sample_usable_sensor(sensor_cfg, data.grid, rng).sensor);
      units.push_back(model.unit_tokens(sensors.back()));
    }
    std::vector<Mat> tokens(count);
    Mat targets(static_cast<Eigen::Index>(count), data.targets.cols());
    std::vector<std::size_t> indices(count);
    for (std::size_t j = 0; j < count; ++j) {
      const std::size_t idx = order[start + j];
      indices[j] = idx;
      const std::size_t s = j % n_sensors;
      tokens[j] = model.tokens(convolve(data.spectra[idx], sensors[s]), units[s]);
      targets.row(static_cast<Eigen::Index>(j)) = data.targets.row(static_cast<Eigen::Index>(idx));
    }
    visit_weights(grads, [](const std::string&, Mat& m) { m.setZero(); });
    try {
      const double loss = reconstruction_loss(model, tokens, targets, data.trunk_features, &grads);
      adam_step(model.weights(), grads, adam, lr);
      weighted += loss * static_cast<double>(count);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Numeric && snapshot) {
        snapshot->batch_indices = indices;
        snapshot->sensors = sensors;
        snapshot->message = e.what();
      }
      throw;
    }
  }
  const double mean = weighted / static_cast<double>(n);
  if (!std::isfinite(mean)) throw_numeric("train_epoch: non-finite epoch loss");
  return mean;
}

double evaluation_loss(const Model& model, const TrainingSet& data, const std::vector<SensorSpec>& sensors) {
  if (data.size() == 0 || sensors.empty()) throw_data("evaluation_loss: empty pixels or sensors");
  double total = 0.0;
  for (const auto& sensor : sensors) {
    const Mat unit = model.unit_tokens(sensor);
    std::vector<Mat> tokens(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) tokens[i] = model.tokens(convolve(data.spectra[i], sensor), unit);
    total += reconstruction_loss(model, tokens, data.targets, data.trunk_features, nullptr);
  }
  return total / static_cast<double>(sensors.size());
}

GradientCheckReport synthetic_gradient_check(const ModelConfig& model_cfg, const RandomSensorConfig& sensor_cfg,
                                             std::uint64_t seed, std::size_t samples, double step, std::size_t pixels) {
  model_cfg.validate();
  const WavelengthGrid grid = WavelengthGrid::linspace(380.0, 1050.0, 24);
  const Dataset data = generate_synthetic(pixels, 2, grid, seed);
  const Model model(model_cfg, seed);
  Rng rng(seed ^ 0xC0FFEE1234ULL);
  RandomSensorConfig small = sensor_cfg;
  small.max_bands = std::min(small.max_bands, small.min_bands + 5);
  const SensorSpec sensor = sample_usable_sensor(small, grid, rng).sensor;
  const TrainingSet set(model, grid, data.pixels);
  const Mat unit = model.unit_tokens(sensor);
  std::vector<Mat> tokens;
  for (const auto& s : set.spectra) tokens.push_back(model.tokens(convolve(s, sensor), unit));
  return gradient_check(model, tokens, set.targets, set.trunk_features, samples, step, rng);
}

std::string format_history(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,val_loss,lr,seconds\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + "," + format_double(r.train_loss) + ",";
    if (std::isfinite(r.val_loss)) out += format_double(r.val_loss);
    out += "," + format_double(r.lr) + "," + format_double(r.seconds) + "\n";
  }
  return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_data("cannot write " + path.string());
  out << text;
  if (!out) throw_data("failed writing " + path.string());
}

void check_resume_compatible(const GlobalConfig& saved, const GlobalConfig& requested) {
  if (!(saved.model == requested.model)) throw_usage("resume: model/encoding config differs from the checkpoint");
  if (!(saved.random_sensor == requested.random_sensor))
    throw_usage("resume: random_sensor config differs from the checkpoint");
  auto a = saved.train;
  auto b = requested.train;
  a.epochs = b.epochs = 0;
  a.checkpoint_every = b.checkpoint_every = 1;
  a.record_timing = b.record_timing = false;
  if (!(a == b)) throw_usage("resume: train config differs from the checkpoint beyond epochs/checkpointing");
}

// Fixed held-out sensors, independent of the training stream.
std::vector<SensorSpec> validation_sensors(const GlobalConfig& cfg, const WavelengthGrid& grid) {
  Rng rng(cfg.train.seed ^ 0x5EED0F5A11DA7E00ULL);
  std::vector<SensorSpec> out;
  for (int i = 0; i < cfg.train.val_sensors; ++i) out.push_back(sample_usable_sensor(cfg.random_sensor, grid, rng).sensor);
  return out;
}

}  // namespace

TrainResult run_training(const Dataset& dataset, const GlobalConfig& cfg, const std::filesystem::path& out_dir,
                         const TrainOptions& options) {
  cfg.validate();
  if (dataset.pixels.empty()) throw_data("training dataset is empty");

  Checkpoint state;
  std::optional<Model> model;
  if (options.resume) {
    state = load_checkpoint(*options.resume);
    check_resume_compatible(state.config, cfg);
    model.emplace(state.model());
    state.config = cfg;
    log::info("resume", {{"checkpoint", options.resume->string()}, {"epoch", state.epoch}});
  } else {
    state.config = cfg;
    state.init_seed = cfg.train.seed;
    model.emplace(cfg.model, state.init_seed);
    state.adam = make_adam_state(model->weights());
    state.rng = Rng(cfg.train.seed).state();
    state.scheduler.lr = cfg.train.lr_init;
    state.best_monitor = std::numeric_limits<double>::infinity();
    if (options.split) {
      state.train_ids = options.split->train_ids;
      state.test_ids = options.split->test_ids;
    } else if (dataset.labeled_count() > 0) {
      const SplitSpec split = class_balanced_split(dataset, cfg.train.seed, cfg.train.train_fraction);
      state.train_ids = split.train_ids;
      state.test_ids = split.test_ids;
    }
    if (cfg.train.include_unlabeled || state.train_ids.empty()) {
      for (const auto& p : dataset.pixels) {
        if (!p.labeled() || state.train_ids.empty()) state.train_ids.push_back(p.pixel_id);
      }
      std::sort(state.train_ids.begin(), state.train_ids.end());
      state.train_ids.erase(std::unique(state.train_ids.begin(), state.train_ids.end()), state.train_ids.end());
    }
  }

  const TrainingSet train_set(*model, dataset.grid, dataset.select(state.train_ids));
  if (train_set.size() == 0) throw_data("no training pixels selected");
  std::optional<TrainingSet> val_set;
  if (!state.test_ids.empty()) val_set.emplace(*model, dataset.grid, dataset.select(state.test_ids));
  const auto val_sensors = validation_sensors(cfg, dataset.grid);
  if (cfg.train.monitor == MonitorSignal::Validation && !val_set)
    throw_usage("train.monitor is 'val' but the dataset has no held-out pixels");

  if (options.write_files) std::filesystem::create_directories(out_dir);
  Rng rng = Rng::from_state(state.rng);
  log::info("train_start", {{"pixels", train_set.size()},
                            {"held_out", val_set ? val_set->size() : 0},
                            {"parameters", parameter_count(model->weights())},
                            {"first_epoch", state.epoch + 1},
                            {"epochs", cfg.train.epochs}});

  while (state.epoch < cfg.train.epochs) {
    const auto t0 = std::chrono::steady_clock::now();
    const int epoch = state.epoch + 1;
    const double lr = state.scheduler.lr;
    DivergenceSnapshot snapshot;
    double train_loss;
    try {
      train_loss = train_epoch(*model, state.adam, train_set, cfg.train, cfg.random_sensor, lr, rng, &snapshot);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Numeric && options.write_files) {
        snapshot.epoch = epoch;
        nlohmann::json diag = {{"epoch", epoch}, {"message", e.what()}, {"batch_indices", snapshot.batch_indices}};
        diag["sensors"] = nlohmann::json::array();
        for (const auto& s : snapshot.sensors) diag["sensors"].push_back(nlohmann::json::parse(sensor_spec_to_json(s)));
        write_text(out_dir / "divergence.json", diag.dump(2));
        Checkpoint snap = state;
        snap.weights = model->weights();
        snap.rng = rng.state();
        save_checkpoint(snap, out_dir / "divergence.ckpt");
        log::error("divergence", {{"epoch", epoch}, {"message", e.what()}});
      }
      throw;
    }
    const double val_loss =
        val_set ? evaluation_loss(*model, *val_set, val_sensors) : std::numeric_limits<double>::quiet_NaN();
    const double monitored = cfg.train.monitor == MonitorSignal::Validation ? val_loss : train_loss;
    plateau_scheduler_update(state.scheduler, cfg.train.plateau, monitored);
    const double seconds =
        cfg.train.record_timing ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() : 0.0;

    state.epoch = epoch;
    state.weights = model->weights();
    state.rng = rng.state();
    state.history.push_back({epoch, train_loss, val_loss, lr, seconds});
    log::info("epoch", {{"epoch", epoch},
                        {"train_loss", train_loss},
                        {"val_loss", std::isfinite(val_loss) ? nlohmann::json(val_loss) : nlohmann::json(nullptr)},
                        {"lr", lr}});

    // Best checkpoint tracks the held-out loss when there is one.
    const double quality = val_set ? val_loss : train_loss;
    if (quality < state.best_monitor) {
      state.best_monitor = quality;
      if (options.write_files) save_checkpoint(state, out_dir / "best.ckpt");
    }
    if (options.write_files) {
      if (epoch % cfg.train.checkpoint_every == 0 || epoch == cfg.train.epochs)
        save_checkpoint(state, out_dir / "last.ckpt");
      write_text(out_dir / "history.csv", format_history(state.history));
    }
  }
  state.weights = model->weights();
  if (options.write_files) {
    save_checkpoint(state, out_dir / "final.ckpt");
    write_text(out_dir / "history.csv", format_history(state.history));
  }
  log::info("train_done", {{"epochs", state.epoch}});
  return {state, state.history};
}

}  // namespace usr
