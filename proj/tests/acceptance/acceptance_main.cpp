// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails. Argument: scratch directory.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/dataset.hpp"
#include "core/eval.hpp"
#include "core/log.hpp"
#include "core/model.hpp"
#include "core/rng.hpp"
#include "core/sensors.hpp"
#include "core/spectral.hpp"
#include "core/training.hpp"
#include "core/usr.hpp"

namespace fs = std::filesystem;
using namespace usr;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::map<int, Outcome> results;

void report(int id, bool pass, const std::string& detail) {
  results[id] = {pass, detail};
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Independent transcriptions used as oracles.
std::vector<double> psi_direct(double lambda, const EncodingParams& p) {
  std::vector<double> out(static_cast<std::size_t>(p.n));
  for (int i = 0; i < p.n; ++i) {
    const int e = i - i % 2;
    const double arg = lambda * std::pow(p.sigma, 2.0 * e / p.n) * p.n / p.r;
    out[static_cast<std::size_t>(i)] = i % 2 == 0 ? std::sin(arg) : std::cos(arg);
  }
  return out;
}

std::vector<double> token_direct(double m, const Band& b, const EncodingParams& p) {
  std::vector<double> lams;
  const double lo = b.center_nm - b.fwhm_nm / 2, hi = b.center_nm + b.fwhm_nm / 2;
  double integral = 0;
  if (b.fwhm_nm < p.sample_step_nm) {
    lams.push_back(b.center_nm);
    integral = b.gain * b.fwhm_nm;
  } else {
    for (int k = 0; lo + k * p.sample_step_nm <= hi + 1e-9; ++k) lams.push_back(lo + k * p.sample_step_nm);
    if (std::abs(lams.back() - hi) > 1e-9) lams.push_back(hi);
    for (std::size_t k = 1; k < lams.size(); ++k) integral += b.gain * (lams[k] - lams[k - 1]);
  }
  std::vector<double> tok(static_cast<std::size_t>(p.n), 0.0);
  for (double l : lams) {
    const auto e = psi_direct(l, p);
    for (std::size_t i = 0; i < tok.size(); ++i) tok[i] += e[i] * b.gain;
  }
  for (double& v : tok) v *= m / integral;
  return tok;
}

double convolve_fine(const Spectrum& s, const Band& b) {
  const auto& g = s.grid();
  const std::size_t n = (g.size() - 1) * 10;
  const double h = (g.end() - g.start()) / static_cast<double>(n);
  double num = 0, den = 0;
  double pl = g.start(), pw = band_srf_value(b, pl), px = s.value_at(pl);
  for (std::size_t i = 1; i <= n; ++i) {
    const double l = i == n ? g.end() : g.start() + h * static_cast<double>(i);
    const double w = band_srf_value(b, l), x = s.value_at(l);
    num += 0.5 * (l - pl) * (w * x + pw * px);
    den += 0.5 * (l - pl) * (w + pw);
    pl = l;
    pw = w;
    px = x;
  }
  return den > 0 ? num / den : s.value_at(b.center_nm);
}

Spectrum smooth_spectrum(const WavelengthGrid& g, Rng& rng) {
  const double c1 = rng.uniform(400, 1000), c2 = rng.uniform(400, 1000);
  const double w1 = rng.uniform(30, 150), w2 = rng.uniform(60, 250);
  std::vector<double> v;
  for (double l : g.points())
    v.push_back(0.1 + std::exp(-std::pow((l - c1) / w1, 2)) + 0.6 * std::exp(-std::pow((l - c2) / w2, 2)));
  return Spectrum(g, v);
}

void criterion_1() {
  const auto t0 = Clock::now();
  const EncodingParams params;
  const SinusoidEncoder enc(params);
  Rng rng(101);
  double token_err = 0;
  for (int t = 0; t < 100; ++t) {
    const double fwhm = t % 10 == 0 ? rng.uniform(0.1, 1.0) : rng.uniform(1.0, 200.0);
    const Band b{rng.uniform(350, 1050), fwhm, rng.uniform(0.2, 2.0)};
    const double m = rng.uniform(0.0, 2.0);
    const auto got = usr_encode(m, b, enc);
    const auto want = token_direct(m, b, params);
    for (std::size_t i = 0; i < want.size(); ++i) token_err = std::max(token_err, std::abs(got[i] - want[i]));
  }

  const auto grid = default_scene_grid();
  double conv_err = 0;
  std::size_t bands = 0;
  for (int t = 0; t < 100; ++t) {
    const auto x = smooth_spectrum(grid, rng);
    const auto sensor = sample_usable_sensor(RandomSensorConfig{}, grid, rng).sensor;
    const auto r = convolve(x, sensor);
    for (std::size_t i = 0; i < r.measurements.size(); ++i) {
      const double ref = convolve_fine(x, r.sensor.bands[i]);
      conv_err = std::max(conv_err, std::abs(r.measurements[i] - ref) / std::abs(ref));
      ++bands;
    }
  }
  const double secs = seconds_since(t0);
  report(1, token_err <= 1e-10 && conv_err <= 0.02 && secs < 10,
         fmt("token max abs err %.3g (<= 1e-10), convolve max rel err %.4f over %zu bands (<= 0.02), %.2f s (< 10)",
             token_err, conv_err, bands, secs));
}

void criterion_2(const fs::path& work) {
  const EncodingParams params;
  const SinusoidEncoder enc(params);
  const fs::path curves = work / "probe_curves";
  fs::create_directories(curves);
  double worst = 1e300;
  std::string worst_band;
  int tested = 0;
  for (int fwhm : {10, 50, 200}) {
    for (int center = 400; center <= 1000; center += 50) {
      const Band b{double(center), double(fwhm), 1.0};
      const auto tok = band_unit_token(b, enc);
      const auto sweep = probe_sweep(tok, 350, 1050, 1, enc);
      double in_sum = 0, out_sum = 0;
      int in_n = 0, out_n = 0;
      std::ofstream csv(curves / fmt("probe_c%d_w%d.csv", center, fwhm));
      csv << "lambda_nm,response\n";
      for (const auto& p : sweep) {
        csv << format_double(p.lambda_nm) << ',' << format_double(p.response) << '\n';
        const double d = std::abs(p.lambda_nm - b.center_nm);
        if (d <= b.fwhm_nm / 2) {
          in_sum += std::abs(p.response);
          ++in_n;
        } else if (d > 2 * b.fwhm_nm) {
          out_sum += std::abs(p.response);
          ++out_n;
        }
      }
      if (out_n == 0) continue;  // no sweep point lies beyond 2 fwhm
      ++tested;
      const double ratio = (in_sum / in_n) / (out_sum / out_n);
      if (ratio < worst) {
        worst = ratio;
        worst_band = fmt("center %d fwhm %d", center, fwhm);
      }
    }
  }
  report(2, worst >= 2.0,
         fmt("min in/out contrast %.4f at %s over %d bands (>= 2); curves in %s", worst, worst_band.c_str(), tested,
             curves.string().c_str()));
}

void criterion_3() {
  const auto grid = default_scene_grid();
  const Model model(desk_config().model, 3);
  const auto data = generate_synthetic(64, 8, grid, 3);
  Rng rng(303);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto& pixel = data.pixels[rng.uniform_index(data.pixels.size())].spectrum;
    const auto sample = convolve(pixel, sample_usable_sensor(RandomSensorConfig{}, grid, rng).sensor);
    std::vector<UsrToken> tokens;
    for (std::size_t i = 0; i < sample.measurements.size(); ++i)
      tokens.push_back(usr_encode(sample.measurements[i], sample.sensor.bands[i], model.config().encoding));
    const RowVec a = model.encode(tokens);
    for (std::size_t i = tokens.size(); i > 1; --i) std::swap(tokens[i - 1], tokens[rng.uniform_index(i)]);
    const RowVec b = model.encode(tokens);
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  report(3, worst <= 1e-5, fmt("max |embedding difference| under shuffle %.3g over 1000 triples (<= 1e-5)", worst));
}

void criterion_4() {
  const auto t0 = Clock::now();
  const auto rep = synthetic_gradient_check(tiny_model_config(), RandomSensorConfig{}, 1);
  const double secs = seconds_since(t0);
  report(4, rep.max_relative_error <= 1e-4 && secs < 60,
         fmt("max relative error %.3g over %zu entries (<= 1e-4), %.2f s (< 60)", rep.max_relative_error,
             rep.entries.size(), secs));
}

struct DeskRun {
  Checkpoint ckpt;
  std::vector<Spectrum> test;
  double seconds = 0;
};

GlobalConfig desk_run_config(std::uint64_t seed) {
  GlobalConfig cfg = desk_config();
  cfg.train.seed = seed;
  cfg.train.record_timing = false;
  return cfg;
}

DeskRun train_desk(const Dataset& data, std::uint64_t seed, const fs::path& dir) {
  const auto t0 = Clock::now();
  DeskRun run;
  run.ckpt = run_training(data, desk_run_config(seed), dir).final_state;
  run.seconds = seconds_since(t0);
  for (const auto& p : data.select(run.ckpt.test_ids)) run.test.push_back(p.spectrum);
  return run;
}

Dataset desk_dataset() { return generate_synthetic(256, 8, default_scene_grid(), 1); }

void criterion_5(const DeskRun& run) {
  const ModelReconstructor rec(run.ckpt.model());
  const auto grid = run.test.front().grid();
  const auto rows = evaluate_reconstruction(rec, run.test, {identity_sensor(grid)}, RandomSensorConfig{}, 0);
  const double score = rows.front().mean;
  report(5, score < 0.05 && run.seconds < 15 * 60,
         fmt("identity-sensor mean test cosine dissimilarity %.5f (< 0.05) after %d epochs on %zu test pixels, "
             "training %.1f s (< 900)",
             score, run.ckpt.epoch, run.test.size(), run.seconds));
}

void criterion_6(const DeskRun& run, const std::vector<SensorSpec>& sensors) {
  const ModelReconstructor rec(run.ckpt.model());
  const auto rows = evaluate_reconstruction(rec, run.test, sensors, run.ckpt.config.random_sensor);
  std::map<std::string, double> score;
  std::string table;
  for (const auto& r : rows) {
    score[r.sensor] = r.mean;
    table += fmt(" %s=%.5f", r.sensor.c_str(), r.mean);
  }
  const bool ordered = score["CASI"] < score["ALI"] && score["ALI"] <= score["RGB"];
  std::string above;
  for (const auto& [name, v] : score)
    if (name != kRandomRowName && v >= score[kRandomRowName]) above += " " + name;
  report(6, ordered && above.empty(),
         fmt("CASI < ALI <= RGB %s; real sensors not below Random:%s;%s", ordered ? "holds" : "violated",
             above.empty() ? " none" : above.c_str(), table.c_str()));
}

void criterion_7(const std::vector<DeskRun>& runs, const std::map<std::string, SensorSpec>& sensors) {
  const auto grid = runs.front().test.front().grid();
  int wins = 0;
  double self_shift = 0;
  std::string detail;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    const ModelReconstructor rec(runs[s].ckpt.model());
    const Mat id = rec.embed(runs[s].test, identity_sensor(grid));
    self_shift = std::max(self_shift, relative_pixel_shift(id, rec.embed(runs[s].test, identity_sensor(grid))));
    const Mat rgb = rec.embed(runs[s].test, clip_to_range(sensors.at("RGB"), grid).sensor);
    const Mat tm = rec.embed(runs[s].test, clip_to_range(sensors.at("L5TM"), grid).sensor);
    const Mat casi = rec.embed(runs[s].test, clip_to_range(sensors.at("CASI"), grid).sensor);
    const double near = relative_pixel_shift(rgb, tm), far = relative_pixel_shift(rgb, casi);
    if (near < far) ++wins;
    detail += fmt(" seed%zu %.3f/%.3f", s, near, far);
  }
  const int n = static_cast<int>(runs.size());
  report(7, self_shift == 0.0 && n >= 5 && 2 * wins > n,
         fmt("identity self-shift %.3g (== 0); shift(RGB,L5TM) < shift(RGB,CASI) in %d of %d seeds;%s", self_shift,
             wins, n, detail.c_str()));
}

void criterion_8() {
  const auto t0 = Clock::now();
  const RandomSensorConfig cfg;
  Rng rng(808);
  long long c3 = 0, c4 = 0, violations = 0;
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) {
    const auto s = sample_random_sensor(cfg, rng);
    c3 += s.bands.size() == 3;
    c4 += s.bands.size() == 4;
    if (!validate_sensor(s).empty()) ++violations;
  }
  const double ratio = double(c3) / double(c4), secs = seconds_since(t0);
  const double target = std::exp(0.1);
  report(8, std::abs(ratio - target) <= 0.02 && violations == 0 && secs < 30,
         fmt("P(3)/P(4) = %.4f (e^0.1 = %.4f +- 0.02), %lld violations (== 0), %.2f s (< 30)", ratio, target,
             violations, secs));
}

void criterion_9(const fs::path& work) {
  const auto data = generate_synthetic(64, 4, default_scene_grid(), 9);
  GlobalConfig cfg = desk_run_config(9);
  cfg.train.epochs = 20;
  cfg.train.checkpoint_every = 10;
  run_training(data, cfg, work / "det_a");
  run_training(data, cfg, work / "det_b");
  const auto a = read_file(work / "det_a" / "history.csv");
  const bool same = !a.empty() && a == read_file(work / "det_b" / "history.csv");

  GlobalConfig half = cfg;
  half.train.epochs = 10;
  run_training(data, half, work / "det_resume");
  TrainOptions resume;
  resume.resume = work / "det_resume" / "last.ckpt";
  run_training(data, cfg, work / "det_resume", resume);
  const bool resumed = a == read_file(work / "det_resume" / "history.csv") &&
                       read_file(work / "det_a" / "final.ckpt") == read_file(work / "det_resume" / "final.ckpt");
  report(9, same && resumed,
         fmt("repeat run history %s; resume at epoch 10 of 20 %s", same ? "bit-identical" : "differs",
             resumed ? "matches the uninterrupted run (history and final checkpoint)" : "differs"));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? argv[1] : "acceptance_work";
  fs::remove_all(work);
  fs::create_directories(work);
  log::set_level(log::Level::Warn);

  const auto guarded = [](int id, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, std::string("threw: ") + e.what());
    }
  };

  guarded(1, [] { criterion_1(); });
  guarded(2, [&] { criterion_2(work); });
  guarded(3, [] { criterion_3(); });
  guarded(4, [] { criterion_4(); });
  guarded(8, [] { criterion_8(); });
  guarded(9, [&] { criterion_9(work); });

  std::vector<DeskRun> runs;
  const auto data = desk_dataset();
  guarded(5, [&] {
    runs.push_back(train_desk(data, 0, work / "desk_seed0"));
    criterion_5(runs.front());
  });
  const auto bundled = load_sensor_dir(fs::path(USR_SPECTRAL_DATA_DIR) / "sensors");
  if (!runs.empty()) guarded(6, [&] { criterion_6(runs.front(), bundled); });
  else report(6, false, "no trained model");
  guarded(7, [&] {
    if (runs.empty()) throw std::runtime_error("no trained model");
    for (std::uint64_t seed = 1; seed < 5; ++seed) runs.push_back(train_desk(data, seed, work / fmt("desk_seed%llu", (unsigned long long)seed)));
    std::map<std::string, SensorSpec> by_name;
    for (const auto& s : bundled) by_name[s.name] = s;
    criterion_7(runs, by_name);
  });

  int failed = 0;
  std::printf("\nsummary:");
  for (const auto& [id, r] : results) {
    std::printf(" %d=%s", id, r.pass ? "PASS" : "FAIL");
    failed += !r.pass;
  }
  std::printf("\n");
  return failed ? 1 : 0;
}
