// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "core/checkpoint.hpp"
#include "core/config.hpp"
#include "core/error.hpp"
#include "core/model.hpp"
#include "core/training.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace usr;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.encoding.n = 32;
  c.encoder = {2, 16, 4, 3, 32, 2};
  c.decoder.layers = 2;
  c.decoder.hidden_dim = 16;
  return c;
}

Mat shuffled_rows(const Mat& m, Rng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(m.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng.uniform_index(i + 1)]);
  Mat out(m.rows(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("config validation names both keys on a token mismatch") {
  ModelConfig c = small_config();
  c.encoder.token_dim = 20;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("encoder.token_dim"), Error);
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("encoding.n"), Error);
  c = small_config();
  c.encoder.heads = 5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = small_config();
  c.decoder.layers = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("encoding is permutation invariant") {
  const Model model(small_config(), 3);
  const auto g = default_scene_grid();
  const Dataset ds = generate_synthetic(8, 3, g, 2);
  Rng rng(17);
  for (int t = 0; t < 30; ++t) {
    const auto sensor = sample_usable_sensor({}, g, rng).sensor;
    const Mat tok = model.tokens(convolve(ds.pixels[static_cast<std::size_t>(t) % 8].spectrum, sensor));
    const RowVec a = model.encode(tok), b = model.encode(shuffled_rows(tok, rng));
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-5);
  }
}

TEST_CASE("duplicated token list encodes like the single token") {
  const Model model(small_config(), 4);
  Rng rng(1);
  Mat one(1, 32);
  for (Eigen::Index i = 0; i < 32; ++i) one(0, i) = rng.uniform(-1, 1);
  Mat two(2, 32);
  two << one, one;
  CHECK((model.encode(one) - model.encode(two)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("token count shape contract") {
  const Model model(small_config(), 5);
  Rng rng(2);
  for (int k : {1, 3, 7, 144}) {
    Mat tok(k, 32);
    for (Eigen::Index i = 0; i < tok.size(); ++i) tok.data()[i] = rng.uniform(-1, 1);
    const RowVec e = model.encode(tok);
    CHECK(e.size() == 3);
    CHECK(e.allFinite());
  }
  CHECK_THROWS_AS(model.encode(Mat(0, 32)), Error);
  CHECK_THROWS_AS(model.encode(Mat::Zero(2, 31)), Error);
  CHECK_THROWS_AS(model.encode(std::vector<UsrToken>{}), Error);
}

TEST_CASE("decode is deterministic and resolution independent") {
  const Model model(small_config(), 6);
  RowVec e(3);
  e << 0.3, -1.2, 0.7;
  CHECK(model.decode(e, 612.5) == model.decode(e, 612.5));
  for (std::size_t n : {50u, 144u, 1000u}) {
    const auto g = WavelengthGrid::linspace(380, 1050, n);
    const auto y = model.decode(e, g.points());
    CHECK(y.size() == n);
    CHECK(std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); }));
  }
  RowVec bad = e;
  bad(1) = std::nan("");
  CHECK_THROWS_AS(model.decode(bad, 600.0), Error);
}

TEST_CASE("both trunk inputs and decoder variants run") {
  for (auto trunk : {TrunkInput::SinusoidEncoding, TrunkInput::RawNormalizedWavelength}) {
    for (auto arch : {DecoderArch::ModifiedMlp, DecoderArch::PlainMlp}) {
      ModelConfig c = small_config();
      c.decoder.trunk_input = trunk;
      c.decoder.architecture = arch;
      const Model model(c, 8);
      RowVec e = RowVec::Ones(3);
      CHECK(std::isfinite(model.decode(e, 700.0)));
    }
  }
}

TEST_CASE("forward keeps the input grid and ignores band order") {
  const Model model(small_config(), 7);
  const auto g = default_scene_grid();
  const Dataset ds = generate_synthetic(1, 1, g, 9);
  const SensorSpec s{"s", {{450, 30, 1}, {600, 50, 1}, {800, 100, 1}}};
  SensorSpec r = s;
  std::reverse(r.bands.begin(), r.bands.end());
  r.allow_overlap = true;  // reversed order is only a grab-bag input
  const auto a = model.forward(ds.pixels[0].spectrum, s);
  CHECK(a.grid() == g);
  const auto b = model.forward(ds.pixels[0].spectrum, r);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(a.values()[i] == doctest::Approx(b.values()[i]).epsilon(1e-9));
}

TEST_CASE("untrained forward is finite on scene-shaped input") {
  const Model model(ModelConfig{}, 1);
  const auto g = default_scene_grid();
  const Dataset ds = generate_synthetic(1, 1, g, 1);
  const auto y = model.forward(ds.pixels[0].spectrum, identity_sensor(g));
  for (double v : y.values()) CHECK(std::isfinite(v));
}

TEST_CASE("seeded init is reproducible") {
  const Model a(small_config(), 21), b(small_config(), 21), c(small_config(), 22);
  bool same = true, differ = false;
  std::vector<const Mat*> wa, wb, wc;
  visit_weights(a.weights(), [&](const std::string&, const Mat& m) { wa.push_back(&m); });
  visit_weights(b.weights(), [&](const std::string&, const Mat& m) { wb.push_back(&m); });
  visit_weights(c.weights(), [&](const std::string&, const Mat& m) { wc.push_back(&m); });
  for (std::size_t i = 0; i < wa.size(); ++i) {
    same &= *wa[i] == *wb[i];
    differ |= *wa[i] != *wc[i];
  }
  CHECK(same);
  CHECK(differ);
}

TEST_CASE("tiny gradient check") {
  const auto report = synthetic_gradient_check(tiny_model_config(), {}, 0, 200);
  CHECK(report.entries.size() == 200);
  CHECK(report.max_relative_error <= 1e-4);
}

TEST_CASE("gradient check across decoder variants") {
  for (auto trunk : {TrunkInput::SinusoidEncoding, TrunkInput::RawNormalizedWavelength}) {
    for (auto arch : {DecoderArch::ModifiedMlp, DecoderArch::PlainMlp}) {
      ModelConfig c = tiny_model_config();
      c.decoder.trunk_input = trunk;
      c.decoder.architecture = arch;
      CHECK(synthetic_gradient_check(c, {}, 3, 200).max_relative_error <= 1e-4);
    }
  }
}

TEST_CASE("loss is stationary at a perfect reconstruction and scales linearly") {
  const Model model(tiny_model_config(), 2);
  const auto g = WavelengthGrid::linspace(380, 1050, 20);
  const Mat feats = model.trunk_features(g.points());
  Rng rng(4);
  std::vector<Mat> tokens;
  for (int i = 0; i < 3; ++i) {
    Mat t(3, 16);
    for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = rng.uniform(-1, 1);
    tokens.push_back(t);
  }
  Mat recon(3, static_cast<Eigen::Index>(g.size()));
  for (int i = 0; i < 3; ++i)
    recon.row(i) = model.decode_batch(model.encode(tokens[static_cast<std::size_t>(i)]), model.trunk_output(feats));

  ModelWeights g1 = zeros_like(model.weights());
  const double at_min = reconstruction_loss(model, tokens, 2.5 * recon, feats, &g1);
  CHECK(std::abs(at_min) < 1e-12);
  double worst = 0;
  visit_weights(g1, [&](const std::string&, const Mat& m) { worst = std::max(worst, m.cwiseAbs().maxCoeff()); });
  CHECK(worst < 1e-9);

  Mat targets = recon;
  for (Eigen::Index i = 0; i < targets.size(); ++i) targets.data()[i] = 1.0 + rng.uniform(0, 1);
  ModelWeights a = zeros_like(model.weights()), b = zeros_like(model.weights());
  const double la = reconstruction_loss(model, tokens, targets, feats, &a, 1.0);
  const double lb = reconstruction_loss(model, tokens, targets, feats, &b, 2.0);
  CHECK(lb == doctest::Approx(2 * la));
  std::vector<const Mat*> va, vb;
  visit_weights(a, [&](const std::string&, const Mat& m) { va.push_back(&m); });
  visit_weights(b, [&](const std::string&, const Mat& m) { vb.push_back(&m); });
  for (std::size_t i = 0; i < va.size(); ++i) CHECK(((*vb[i]) - 2.0 * (*va[i])).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("weights round-trip through a checkpoint") {
  const auto dir = testing::temp_dir("ckpt");
  Checkpoint c;
  c.config = default_config();
  c.config.model = small_config();
  c.init_seed = 12;
  const Model model(c.config.model, c.init_seed);
  c.weights = model.weights();
  c.adam = make_adam_state(c.weights);
  c.adam.step = 3;
  c.rng = Rng(77).state();
  c.scheduler.lr = 2.5e-4;
  c.epoch = 4;
  c.best_monitor = 0.125;
  c.history = {{1, 0.5, std::nan(""), 1e-3, 0.0}, {2, 0.25, 0.3, 1e-3, 0.0}};
  c.train_ids = {1, 2, 5};
  c.test_ids = {3, 4};
  save_checkpoint(c, dir / "a.ckpt");
  const Checkpoint d = load_checkpoint(dir / "a.ckpt");
  CHECK(d.epoch == 4);
  CHECK(d.adam.step == 3);
  CHECK(d.rng == c.rng);
  CHECK(d.scheduler.lr == c.scheduler.lr);
  CHECK(d.train_ids == c.train_ids);
  CHECK(std::isnan(d.history[0].val_loss));
  CHECK(d.history[1].val_loss == 0.3);
  CHECK(d.config.model == c.config.model);
  std::vector<const Mat*> wa, wb;
  visit_weights(c.weights, [&](const std::string&, const Mat& m) { wa.push_back(&m); });
  visit_weights(d.weights, [&](const std::string&, const Mat& m) { wb.push_back(&m); });
  for (std::size_t i = 0; i < wa.size(); ++i) CHECK(*wa[i] == *wb[i]);

  std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.ckpt"), Error);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), Error);
}

}
