// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "core/config.hpp"
#include "core/error.hpp"
#include "core/metrics.hpp"
#include "core/optim.hpp"
#include "core/training.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace usr;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GlobalConfig quick_config(int epochs) {
  GlobalConfig c = default_config();
  c.model = tiny_model_config();
  c.train.epochs = epochs;
  c.train.batch_size = 8;
  c.train.val_sensors = 2;
  c.train.checkpoint_every = 2;
  c.train.record_timing = false;
  c.train.seed = 5;
  c.random_sensor.seed = 5;
  return c;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("cosine dissimilarity examples") {
  const std::vector<double> x{1, 2, 3}, x3{3, 6, 9};
  CHECK(std::abs(cosine_dissimilarity(x, x)) < 1e-15);
  CHECK(std::abs(cosine_dissimilarity(x, x3)) < 1e-15);
  CHECK(cosine_dissimilarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == doctest::Approx(1.0));
  CHECK(cosine_dissimilarity(std::vector<double>{1, 0}, std::vector<double>{-1, 0}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(cosine_dissimilarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}), Error);
  CHECK_THROWS_AS(cosine_dissimilarity(std::vector<double>{1, 0}, std::vector<double>{1, 0, 0}), Error);
}

TEST_CASE("cosine dissimilarity is scale invariant") {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(20), b(20), sa(20);
    const double s = rng.uniform(0.01, 100);
    for (int i = 0; i < 20; ++i) {
      a[i] = rng.uniform(-1, 1);
      b[i] = rng.uniform(-1, 1);
      sa[i] = s * a[i];
    }
    const double d = cosine_dissimilarity(a, b);
    CHECK(d >= 0.0);
    CHECK(d <= 2.0);
    CHECK(std::abs(cosine_dissimilarity(sa, b) - d) < 1e-12);
  }
}

TEST_CASE("adam on w^2 matches the hand-computed sequence") {
  Mat w(1, 1), m = Mat::Zero(1, 1), v = Mat::Zero(1, 1);
  w(0, 0) = 1.0;
  const double expected[3] = {0.9000000005, 0.8004122286917928, 0.7015862729460303};
  for (int t = 1; t <= 3; ++t) {
    const Mat g = 2.0 * w;
    adam_update(w, g, m, v, 0.1, t, {});
    CHECK(w(0, 0) == doctest::Approx(expected[t - 1]).epsilon(1e-14));
  }
}

TEST_CASE("adam first step and zero gradient") {
  Rng rng(3);
  Mat w(4, 5), g(4, 5), m = Mat::Zero(4, 5), v = Mat::Zero(4, 5);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    w.data()[i] = rng.uniform(-1, 1);
    g.data()[i] = rng.uniform(-10, 10);
  }
  const Mat w0 = w;
  adam_update(w, g, m, v, 1e-3, 1, {});
  CHECK(((w - w0).cwiseAbs().array() <= 1e-3 * (1 + 1e-6)).all());
  for (Eigen::Index i = 0; i < w.size(); ++i) CHECK((w0.data()[i] - w.data()[i]) * g.data()[i] > 0);

  Mat z = w0, zm = Mat::Zero(4, 5), zv = Mat::Zero(4, 5);
  for (int t = 1; t <= 10; ++t) adam_update(z, Mat::Zero(4, 5), zm, zv, 1e-3, t, {});
  CHECK(z == w0);
}

TEST_CASE("adam rejects non-finite gradients") {
  const Model model(tiny_model_config(), 1);
  ModelWeights params = model.weights();
  ModelWeights grads = zeros_like(params);
  AdamState st = make_adam_state(params);
  visit_weights(grads, [](const std::string& name, Mat& m) {
    if (name.find("decoder.bias") != std::string::npos) m(0, 0) = std::nan("");
  });
  CHECK_THROWS_AS(adam_step(params, grads, st, 1e-3), Error);
}

TEST_CASE("plateau scheduler examples") {
  const PlateauConfig cfg{5, 0.5, 1e-4, 1e-6};
  PlateauState s;
  for (int e = 0; e < 50; ++e) plateau_scheduler_update(s, cfg, 1.0 / (e + 1));
  CHECK(s.lr == 1e-3);

  PlateauState c;
  for (int e = 0; e < cfg.patience; ++e) plateau_scheduler_update(c, cfg, 0.5);
  CHECK(c.lr == 1e-3);
  plateau_scheduler_update(c, cfg, 0.5);
  CHECK(c.lr == doctest::Approx(1e-3 * 0.5));

  PlateauState f;
  for (int e = 0; e < 1000; ++e) {
    plateau_scheduler_update(f, cfg, 0.5);
    CHECK(f.lr >= cfg.lr_min);
  }
  CHECK(f.lr == cfg.lr_min);
}

TEST_CASE("train config validation") {
  TrainConfig t;
  t.epochs = 0;
  CHECK_THROWS_AS(t.validate(), Error);
  t = {};
  t.plateau.factor = 1.0;
  CHECK_THROWS_AS(t.validate(), Error);
  t = {};
  t.lr_init = 0;
  CHECK_THROWS_AS(t.validate(), Error);
}

TEST_CASE("epoch losses stay in range and history has one row per epoch") {
  const auto dir = testing::temp_dir("history");
  const Dataset ds = generate_synthetic(24, 3, default_scene_grid(), 1);
  const auto result = run_training(ds, quick_config(5), dir);
  CHECK(result.history.size() == 5);
  for (const auto& r : result.history) {
    CHECK(r.train_loss >= 0.0);
    CHECK(r.train_loss <= 2.0);
    CHECK(std::isfinite(r.val_loss));
  }
  const std::string csv = read_file(dir / "history.csv");
  CHECK(csv.rfind("epoch,train_loss,val_loss,lr,seconds\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  for (const char* f : {"last.ckpt", "best.ckpt", "final.ckpt"}) CHECK(std::filesystem::exists(dir / f));
}

TEST_CASE("fixed seed reproduces the history bit for bit") {
  const Dataset ds = generate_synthetic(24, 3, default_scene_grid(), 2);
  const auto a = testing::temp_dir("det_a"), b = testing::temp_dir("det_b");
  run_training(ds, quick_config(4), a);
  run_training(ds, quick_config(4), b);
  CHECK(read_file(a / "history.csv") == read_file(b / "history.csv"));
}

TEST_CASE("resume reproduces the uninterrupted run") {
  const Dataset ds = generate_synthetic(24, 3, default_scene_grid(), 3);
  const auto full = testing::temp_dir("resume_full"), part = testing::temp_dir("resume_part");
  const auto whole = run_training(ds, quick_config(6), full);
  run_training(ds, quick_config(3), part);
  TrainOptions opts;
  opts.resume = part / "last.ckpt";
  const auto resumed = run_training(ds, quick_config(6), part, opts);
  CHECK(read_file(full / "history.csv") == read_file(part / "history.csv"));
  std::vector<const Mat*> wa, wb;
  visit_weights(whole.final_state.weights, [&](const std::string&, const Mat& m) { wa.push_back(&m); });
  visit_weights(resumed.final_state.weights, [&](const std::string&, const Mat& m) { wb.push_back(&m); });
  for (std::size_t i = 0; i < wa.size(); ++i) CHECK(*wa[i] == *wb[i]);
}

TEST_CASE("resume refuses a different model") {
  const Dataset ds = generate_synthetic(12, 2, default_scene_grid(), 3);
  const auto dir = testing::temp_dir("resume_bad");
  run_training(ds, quick_config(2), dir);
  GlobalConfig other = quick_config(4);
  other.model.decoder.hidden_dim = 12;
  TrainOptions opts;
  opts.resume = dir / "last.ckpt";
  CHECK_THROWS_AS(run_training(ds, other, dir, opts), Error);
}

TEST_CASE("single constant spectrum is learned") {
  const auto g = default_scene_grid();
  Dataset ds{g, {{Spectrum(g, std::vector<double>(g.size(), 0.7)), -1, 0}}, {}};
  GlobalConfig cfg = desk_config();
  cfg.train.epochs = 300;
  cfg.train.batch_size = 1;
  cfg.train.val_sensors = 2;
  cfg.train.record_timing = false;
  const auto result = run_training(ds, cfg, testing::temp_dir("constant"), {std::nullopt, std::nullopt, false});
  CHECK(result.history.back().train_loss < 0.01);

  const Model model = result.final_state.model();
  const Spectrum out = model.forward(ds.pixels[0].spectrum, SensorSpec{"v", {{550, 100, 1}, {800, 60, 1}}});
  const auto y = out.values();
  double mean = 0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double worst = 0;
  for (double v : y) worst = std::max(worst, std::abs(v - mean) / std::abs(mean));
  CHECK(worst <= 0.05);
}

TEST_CASE("small synthetic run fits the time budget") {
  const Dataset ds = generate_synthetic(64, 4, default_scene_grid(), 4);
  GlobalConfig cfg = quick_config(50);
  const auto t0 = std::chrono::steady_clock::now();
  run_training(ds, cfg, testing::temp_dir("budget"), {std::nullopt, std::nullopt, false});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(seconds < 60.0);
}

TEST_CASE("train_epoch shares one sensor per batch by default") {
  const Dataset ds = generate_synthetic(10, 2, default_scene_grid(), 6);
  Model model(tiny_model_config(), 1);
  AdamState adam = make_adam_state(model.weights());
  const TrainingSet set(model, ds.grid, ds.pixels);
  TrainConfig t;
  t.batch_size = 4;
  Rng a(9), b(9);
  const double l1 = train_epoch(model, adam, set, t, {}, 1e-3, a);
  CHECK(l1 >= 0.0);
  CHECK(l1 <= 2.0);
  t.per_sample_sensors = true;
  Model m2(tiny_model_config(), 1);
  AdamState adam2 = make_adam_state(m2.weights());
  CHECK(train_epoch(m2, adam2, set, t, {}, 1e-3, b) != l1);
}

}
