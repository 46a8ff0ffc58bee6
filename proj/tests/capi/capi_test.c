/* Copyright 2026 The usr-spectral Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Exercises the C interface from C. Argument: scratch directory.
 */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/stat.h>

#include "usr_spectral/usr_spectral.h"

static int failures = 0;

#define EXPECT(cond)                                                       \
  do {                                                                     \
    if (!(cond)) {                                                         \
      fprintf(stderr, "%s:%d: expected %s (%s)\n", __FILE__, __LINE__, #cond, \
              usr_last_error());                                           \
      ++failures;                                                          \
    }                                                                      \
  } while (0)

static void test_math(void) {
  usr_encoding_params p;
  usr_encoding_params_default(&p);
  EXPECT(p.n == 200 && p.sigma == 3e-4 && p.r == 10.0);
  double psi[200];
  EXPECT(usr_sinusoid_encode(&p, 500.0, psi) == USR_OK);
  EXPECT(fabs(psi[0] - sin(10000.0)) < 1e-12);

  double t1[200], t2[200];
  EXPECT(usr_band_token(&p, 1.0, 550.0, 10.0, 1.0, t1) == USR_OK);
  EXPECT(usr_band_token(&p, 2.0, 550.0, 10.0, 1.0, t2) == USR_OK);
  double a = 0, b = 0;
  EXPECT(usr_band_probe(&p, t1, 550.0, &a) == USR_OK);
  EXPECT(usr_band_probe(&p, t2, 550.0, &b) == USR_OK);
  EXPECT(fabs(b - 2 * a) < 1e-9 * fabs(b));

  usr_encoding_params odd = p;
  odd.n = 7;
  EXPECT(usr_sinusoid_encode(&odd, 500.0, psi) == USR_ERR_USAGE);
  EXPECT(strlen(usr_last_error()) > 0);
  EXPECT(usr_sinusoid_encode(&p, -1.0, psi) != USR_OK);
}

static void test_sensors(void) {
  const double wl[5] = {400, 450, 500, 550, 600};
  const double x[5] = {2, 2, 2, 2, 2};
  const double centers[2] = {450, 560};
  const double fwhms[2] = {40, 60};
  usr_sensor* s = NULL;
  EXPECT(usr_sensor_create("pair", centers, fwhms, NULL, 2, 0, &s) == USR_OK);
  double out[2];
  size_t n = 0;
  EXPECT(usr_convolve(wl, x, 5, s, out, &n) == USR_OK);
  EXPECT(n == 2 && fabs(out[0] - 2) < 1e-12 && fabs(out[1] - 2) < 1e-12);
  char* json = NULL;
  EXPECT(usr_sensor_to_json(s, &json) == USR_OK);
  EXPECT(json && strstr(json, "\"pair\"") != NULL);
  usr_string_free(json);
  usr_sensor_free(s);

  const double overlapping[2] = {450, 470};
  s = NULL;
  EXPECT(usr_sensor_create("bad", overlapping, fwhms, NULL, 2, 0, &s) == USR_ERR_DATA);
  EXPECT(s == NULL);

  usr_sensor* ali = NULL;
  EXPECT(usr_sensor_load(USR_SPECTRAL_DATA_DIR "/sensors/ali.json", &ali) == USR_OK);
  size_t count = 0;
  EXPECT(usr_sensor_band_count(ali, &count) == USR_OK && count == 10);
  double c = 0, w = 0, g = 0;
  EXPECT(usr_sensor_band(ali, 0, &c, &w, &g) == USR_OK && c == 443.0 && g == 1.0);
  EXPECT(usr_sensor_band(ali, 99, &c, &w, &g) == USR_ERR_USAGE);
  usr_sensor_free(ali);
  EXPECT(usr_sensor_load("/nonexistent.json", &ali) == USR_ERR_DATA);
}

static void test_pipeline(const char* work) {
  char path[1024];
  usr_dataset* ds = NULL;
  EXPECT(usr_dataset_synthetic(12, 3, 7, &ds) == USR_OK);
  size_t pixels = 0, bands = 0, classes = 0;
  EXPECT(usr_dataset_shape(ds, &pixels, &bands, &classes) == USR_OK);
  EXPECT(pixels == 12 && bands == 144 && classes == 3);

  usr_config* cfg = NULL;
  EXPECT(usr_config_default(&cfg) == USR_OK);
  const char* sets[] = {"encoding.n=16", "encoder.hidden_dim=8", "encoder.heads=2", "encoder.embed_dim=2",
                        "decoder.hidden_dim=8", "train.epochs=2", "train.batch_size=4", "train.val_sensors=1",
                        "train.record_timing=false"};
  for (size_t i = 0; i < sizeof sets / sizeof *sets; ++i) EXPECT(usr_config_override(cfg, sets[i]) == USR_OK);
  EXPECT(usr_config_override(cfg, "train.bogus=1") == USR_ERR_USAGE);

  usr_sensor* rnd = NULL;
  EXPECT(usr_sensor_random(cfg, ds, 3, &rnd) == USR_OK);
  usr_dataset* view = NULL;
  EXPECT(usr_dataset_augment(ds, rnd, &view) == USR_OK);
  size_t vb = 0, rb = 0;
  usr_dataset_shape(view, NULL, &vb, NULL);
  usr_sensor_band_count(rnd, &rb);
  EXPECT(vb == rb);
  usr_dataset_free(view);

  snprintf(path, sizeof path, "%s/run", work);
  usr_train_summary summary;
  EXPECT(usr_train(ds, cfg, path, NULL, &summary) == USR_OK);
  EXPECT(summary.epochs == 2 && summary.train_pixels == 6 && summary.test_pixels == 6);
  EXPECT(summary.final_train_loss >= 0 && summary.final_train_loss <= 2);

  snprintf(path, sizeof path, "%s/run/final.ckpt", work);
  usr_model* model = NULL;
  EXPECT(usr_model_load(path, &model) == USR_OK);
  size_t dim = 0;
  EXPECT(usr_model_embed_dim(model, &dim) == USR_OK && dim == 2);

  double wl[144], values[144], recon[144], emb[2];
  int cls = 0;
  long long id = 0;
  EXPECT(usr_dataset_wavelengths(ds, wl, 144) == USR_OK);
  EXPECT(usr_dataset_pixel(ds, 4, values, 144, &cls, &id) == USR_OK);
  EXPECT(cls == 1 && id == 4);
  EXPECT(usr_model_embed(model, wl, values, 144, rnd, emb) == USR_OK);
  EXPECT(isfinite(emb[0]) && isfinite(emb[1]));
  EXPECT(usr_model_reconstruct(model, wl, values, 144, rnd, recon) == USR_OK);
  EXPECT(isfinite(recon[100]));

  snprintf(path, sizeof path, "%s/eval", work);
  usr_eval_options opts;
  usr_eval_options_default(&opts);
  EXPECT(opts.n_random == 200);
  opts.n_random = 2;
  EXPECT(usr_evaluate(model, ds, USR_SPECTRAL_DATA_DIR "/sensors", path, &opts) == USR_OK);
  snprintf(path, sizeof path, "%s/eval/recon_report.csv", work);
  FILE* f = fopen(path, "r");
  EXPECT(f != NULL);
  if (f) fclose(f);

  usr_gradcheck_result gc;
  EXPECT(usr_gradcheck(NULL, 1, 200, NULL, &gc) == USR_OK);
  EXPECT(gc.checked == 200 && gc.max_relative_error <= 1e-4);

  EXPECT(usr_model_load("/nonexistent.ckpt", &model) != USR_OK);
  usr_model_free(model);
  usr_sensor_free(rnd);
  usr_config_free(cfg);
  usr_dataset_free(ds);
}

int main(int argc, char** argv) {
  const char* work = argc > 1 ? argv[1] : ".";
  mkdir(work, 0755);
  usr_log_set_level("off");
  EXPECT(usr_log_set_level("loud") == USR_ERR_USAGE);
  usr_log_set_level("off");
  EXPECT(strcmp(usr_version(), "0.1.0") == 0);
  test_math();
  test_sensors();
  test_pipeline(work);
  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  return failures ? 1 : 0;
}
