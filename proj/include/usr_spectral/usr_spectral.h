/* Copyright 2026 The usr-spectral Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the usr-spectral library. Every call returns a usr_status;
 * on failure usr_last_error() describes the problem (per thread). Objects are
 * opaque handles released with the matching *_free function. Strings returned
 * through char** are owned by the caller and released with usr_string_free.
 */
#ifndef USR_SPECTRAL_H_
#define USR_SPECTRAL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(USR_SPECTRAL_BUILDING)
#define USR_API __declspec(dllexport)
#else
#define USR_API __declspec(dllimport)
#endif
#else
#define USR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum usr_status {
  USR_OK = 0,
  USR_ERR_USAGE = 1,    /* bad arguments or configuration */
  USR_ERR_DATA = 2,     /* invalid input data, I/O failure */
  USR_ERR_NUMERIC = 3,  /* divergence or non-finite values */
  USR_ERR_INTERNAL = 4
} usr_status;

typedef struct usr_dataset usr_dataset;
typedef struct usr_sensor usr_sensor;
typedef struct usr_config usr_config;
typedef struct usr_model usr_model;

USR_API const char* usr_version(void);
USR_API const char* usr_last_error(void);
USR_API void usr_string_free(char* s);

/* "debug", "info", "warn", "error" or "off". */
USR_API usr_status usr_log_set_level(const char* level);

/* ---- encoding math ---- */

typedef struct usr_encoding_params {
  double sigma;
  double r;
  int n;
  double sample_step_nm;
} usr_encoding_params;

USR_API void usr_encoding_params_default(usr_encoding_params* out);
/* out receives params->n values. */
USR_API usr_status usr_sinusoid_encode(const usr_encoding_params* params, double lambda_nm, double* out);
USR_API usr_status usr_band_token(const usr_encoding_params* params, double measurement, double center_nm,
                                  double fwhm_nm, double gain, double* out);
USR_API usr_status usr_band_probe(const usr_encoding_params* params, const double* token, double lambda_nm,
                                  double* out);
/* Writes `lambda_nm,response` rows for the unit token of one band. */
USR_API usr_status usr_probe_csv(const usr_encoding_params* params, double center_nm, double fwhm_nm,
                                 double from_nm, double to_nm, double step_nm, const char* path);

/* ---- datasets ---- */

USR_API usr_status usr_dataset_load(const char* path, usr_dataset** out);
/* Uses the 144-band 380-1050 nm scene grid. */
USR_API usr_status usr_dataset_synthetic(size_t pixels, size_t classes, uint64_t seed, usr_dataset** out);
USR_API usr_status usr_dataset_save(const usr_dataset* ds, const char* path);
USR_API usr_status usr_dataset_shape(const usr_dataset* ds, size_t* pixels, size_t* bands, size_t* classes);
USR_API usr_status usr_dataset_wavelengths(const usr_dataset* ds, double* out, size_t capacity);
USR_API usr_status usr_dataset_pixel(const usr_dataset* ds, size_t index, double* values, size_t capacity,
                                     int* class_id, long long* pixel_id);
/* Convolves every pixel through `sensor`; the result's grid is the band centers. */
USR_API usr_status usr_dataset_augment(const usr_dataset* ds, const usr_sensor* sensor, usr_dataset** out);
USR_API void usr_dataset_free(usr_dataset* ds);

/* ---- sensors ---- */

USR_API usr_status usr_sensor_load(const char* path, usr_sensor** out);
/* gains may be NULL (all 1). */
USR_API usr_status usr_sensor_create(const char* name, const double* centers_nm, const double* fwhms_nm,
                                     const double* gains, size_t count, int allow_overlap, usr_sensor** out);
/* One band per grid point, edges at the midpoints. */
USR_API usr_status usr_sensor_identity(const usr_dataset* ds, usr_sensor** out);
/* Draws a random sensor with the config's random_sensor settings; when ds is
 * non-NULL the draw is repeated until it keeps a band inside the data range and
 * the result is clipped to it. */
USR_API usr_status usr_sensor_random(const usr_config* cfg, const usr_dataset* ds, uint64_t seed,
                                     usr_sensor** out);
USR_API usr_status usr_sensor_band_count(const usr_sensor* s, size_t* out);
USR_API usr_status usr_sensor_band(const usr_sensor* s, size_t index, double* center_nm, double* fwhm_nm,
                                   double* gain);
USR_API usr_status usr_sensor_to_json(const usr_sensor* s, char** out);
/* Band measurements of one spectrum. `out` must hold the band count; `count`
 * receives the number of surviving bands. */
USR_API usr_status usr_convolve(const double* wavelengths_nm, const double* values, size_t n, const usr_sensor* s,
                                double* out, size_t* count);
USR_API void usr_sensor_free(usr_sensor* s);

/* ---- configuration ---- */

USR_API usr_status usr_config_default(usr_config** out);
/* Reduced model and schedule that train on one CPU core in minutes. */
USR_API usr_status usr_config_desk(usr_config** out);
USR_API usr_status usr_config_load(const char* path, usr_config** out);
/* "section.key=value", e.g. "train.epochs=20". */
USR_API usr_status usr_config_override(usr_config* cfg, const char* assignment);
USR_API usr_status usr_config_validate(const usr_config* cfg);
USR_API usr_status usr_config_to_json(const usr_config* cfg, char** out);
USR_API void usr_config_free(usr_config* cfg);

/* ---- training ---- */

typedef struct usr_train_summary {
  int epochs;
  double final_train_loss;
  double final_val_loss; /* NaN without held-out pixels */
  double final_lr;
  size_t train_pixels;
  size_t test_pixels;
} usr_train_summary;

/* Writes history.csv, last.ckpt, best.ckpt and final.ckpt under out_dir.
 * resume_path may be NULL. summary may be NULL. */
USR_API usr_status usr_train(const usr_dataset* ds, const usr_config* cfg, const char* out_dir,
                             const char* resume_path, usr_train_summary* summary);

/* ---- models ---- */

USR_API usr_status usr_model_load(const char* checkpoint_path, usr_model** out);
USR_API usr_status usr_model_embed_dim(const usr_model* m, size_t* out);
/* out receives embed_dim values. */
USR_API usr_status usr_model_embed(const usr_model* m, const double* wavelengths_nm, const double* values, size_t n,
                                   const usr_sensor* s, double* out);
/* out receives n values on the input grid. */
USR_API usr_status usr_model_reconstruct(const usr_model* m, const double* wavelengths_nm, const double* values,
                                         size_t n, const usr_sensor* s, double* out);
/* CSV rows `pixel_id,class_id,e1..eD`, one per pixel. */
USR_API usr_status usr_model_encode_csv(const usr_model* m, const usr_dataset* ds, const usr_sensor* s,
                                        const char* path);
USR_API void usr_model_free(usr_model* m);

/* ---- evaluation ---- */

typedef struct usr_eval_options {
  int n_random;             /* random sensors averaged into the Random row */
  int within_denominator;   /* nonzero: within-sensor pairs for the shift denominator */
  int all_pixels;           /* nonzero: ignore the checkpoint's held-out split */
  const char* class_map;    /* class map JSON for embedding exports, may be NULL */
} usr_eval_options;

USR_API void usr_eval_options_default(usr_eval_options* out);

/* Reads every *.json sensor in sensors_dir and writes recon_report.csv,
 * shift_report.csv and embeddings_<sensor>.csv under out_dir. */
USR_API usr_status usr_evaluate(const usr_model* m, const usr_dataset* ds, const char* sensors_dir,
                                const char* out_dir, const usr_eval_options* options);

/* Trains one model per class-balanced split and writes aggregated reports;
 * each trial's run lives in out_dir/trial_<k>. */
USR_API usr_status usr_crossval(const usr_dataset* ds, const usr_config* cfg, const char* sensors_dir,
                                const char* out_dir, int trials, const usr_eval_options* options);

/* ---- diagnostics ---- */

typedef struct usr_gradcheck_result {
  double max_relative_error;
  double loss;
  size_t checked;
  size_t parameters;
} usr_gradcheck_result;

/* cfg == NULL selects the tiny model. report_path (may be NULL) receives a
 * CSV of every checked entry. */
USR_API usr_status usr_gradcheck(const usr_config* cfg, uint64_t seed, size_t samples, const char* report_path,
                                 usr_gradcheck_result* out);

#ifdef __cplusplus
}
#endif

#endif /* USR_SPECTRAL_H_ */
