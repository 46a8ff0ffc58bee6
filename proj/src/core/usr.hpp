// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "core/spectral.hpp"

namespace usr {

// Hyperparameters of the sinusoid wavelength encoding and of the band
// tokenization built on it.
struct EncodingParams {
  double sigma = 3e-4;  // frequency base
  double r = 10.0;      // scale
  int n = 200;          // encoding dimension, even
  double sample_step_nm = 1.0;

  void validate() const;
  bool operator==(const EncodingParams&) const = default;
};

// Frequencies of the sin/cos pairs, precomputed once per parameter set.
// Component 2k is sin(lambda * w_k), component 2k+1 is cos(lambda * w_k),
// with w_k = sigma^(4k/n) * n / r.
class SinusoidEncoder {
 public:
  explicit SinusoidEncoder(const EncodingParams& params);

  const EncodingParams& params() const { return params_; }
  int dim() const { return params_.n; }
  std::span<const double> frequencies() const { return freqs_; }

  // out.size() must equal dim().
  void encode(double lambda_nm, std::span<double> out) const;
  std::vector<double> encode(double lambda_nm) const;
  // Adds weight * psi(lambda) into acc.
  void accumulate(double lambda_nm, double weight, std::span<double> acc) const;

 private:
  EncodingParams params_;
  std::vector<double> freqs_;
};

using UsrToken = std::vector<double>;

std::vector<double> sinusoid_encode(double lambda_nm, const EncodingParams& params);

// Wavelengths at which a band is sampled for tokenization: the lattice from
// the lower edge at sample_step_nm, with the upper edge appended when the
// lattice misses it. A band narrower than one step collapses to its center.
std::vector<double> band_sample_points(const Band& band, double sample_step_nm);

// Token for a unit measurement. Tokens are linear in the measurement, so
// usr_encode(r, band) == r * band_unit_token(band).
UsrToken band_unit_token(const Band& band, const SinusoidEncoder& encoder);

UsrToken usr_encode(double measurement, const Band& band, const SinusoidEncoder& encoder);
UsrToken usr_encode(double measurement, const Band& band, const EncodingParams& params);

// Raw inner product <token, psi(lambda)>.
double band_probe(std::span<const double> token, double lambda_nm, const SinusoidEncoder& encoder);
double band_probe(std::span<const double> token, double lambda_nm, const EncodingParams& params);

struct ProbePoint {
  double lambda_nm;
  double response;
};

// Probe sweep over [from_nm, to_nm] at step_nm, endpoints included.
std::vector<ProbePoint> probe_sweep(std::span<const double> token, double from_nm, double to_nm, double step_nm,
                                    const SinusoidEncoder& encoder);

}  // namespace usr
