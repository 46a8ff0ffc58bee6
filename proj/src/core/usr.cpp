// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/usr.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"

namespace usr {

void EncodingParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw_usage("encoding.sigma must be positive");
  if (!(r > 0.0) || !std::isfinite(r)) throw_usage("encoding.r must be positive");
  if (n <= 0 || n % 2 != 0) throw_usage("encoding.n must be a positive even integer, got " + std::to_string(n));
  if (!(sample_step_nm > 0.0)) throw_usage("encoding.sample_step_nm must be positive");
}

SinusoidEncoder::SinusoidEncoder(const EncodingParams& params) : params_(params) {
  params_.validate();
  const double n = params_.n;
  freqs_.resize(static_cast<std::size_t>(params_.n / 2));
  for (std::size_t k = 0; k < freqs_.size(); ++k) {
    const double i = 2.0 * static_cast<double>(k);  // even component index
    freqs_[k] = std::pow(params_.sigma, 2.0 * i / n) * n / params_.r;
  }
}

void SinusoidEncoder::encode(double lambda_nm, std::span<double> out) const {
  if (out.size() != static_cast<std::size_t>(params_.n)) throw_data("sinusoid encoding: output size mismatch");
  if (lambda_nm < 0.0 || !std::isfinite(lambda_nm))
    throw_data("sinusoid encoding: wavelength must be finite and >= 0, got " + std::to_string(lambda_nm));
  for (std::size_t k = 0; k < freqs_.size(); ++k) {
    const double a = lambda_nm * freqs_[k];
    out[2 * k] = std::sin(a);
    out[2 * k + 1] = std::cos(a);
  }
}

std::vector<double> SinusoidEncoder::encode(double lambda_nm) const {
  std::vector<double> out(static_cast<std::size_t>(params_.n));
  encode(lambda_nm, out);
  return out;
}

void SinusoidEncoder::accumulate(double lambda_nm, double weight, std::span<double> acc) const {
  if (lambda_nm < 0.0 || !std::isfinite(lambda_nm))
    throw_data("sinusoid encoding: wavelength must be finite and >= 0, got " + std::to_string(lambda_nm));
  for (std::size_t k = 0; k < freqs_.size(); ++k) {
    const double a = lambda_nm * freqs_[k];
    acc[2 * k] += weight * std::sin(a);
    acc[2 * k + 1] += weight * std::cos(a);
  }
}

std::vector<double> sinusoid_encode(double lambda_nm, const EncodingParams& params) {
  return SinusoidEncoder(params).encode(lambda_nm);
}

std::vector<double> band_sample_points(const Band& band, double step) {
  const double lo = band.lower_nm();
  const double hi = band.upper_nm();
  if (band.fwhm_nm < step) return {band.center_nm};
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  std::vector<double> pts;
  pts.reserve(count + 2);
  for (std::size_t i = 0; i <= count; ++i) pts.push_back(lo + static_cast<double>(i) * step);
  if (hi - pts.back() > 1e-9 * step) pts.push_back(hi);
  return pts;
}

UsrToken band_unit_token(const Band& band, const SinusoidEncoder& encoder) {
  if (!(band.fwhm_nm > 0.0) || !(band.gain > 0.0)) throw_data("usr_encode: band must have positive fwhm and gain");
  const auto pts = band_sample_points(band, encoder.params().sample_step_nm);
  UsrToken token(static_cast<std::size_t>(encoder.dim()), 0.0);
  double srf_integral;
  if (pts.size() < 2) {
    srf_integral = band.gain * band.fwhm_nm;
  } else {
    std::vector<double> srf(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) srf[i] = band_srf_value(band, pts[i]);
    srf_integral = quadrature(srf, pts);
  }
  for (double lambda : pts) encoder.accumulate(lambda, band_srf_value(band, lambda), token);
  const double scale = 1.0 / srf_integral;
  for (double& v : token) v *= scale;
  return token;
}

UsrToken usr_encode(double measurement, const Band& band, const SinusoidEncoder& encoder) {
  if (!std::isfinite(measurement)) throw_data("usr_encode: measurement is not finite");
  UsrToken token = band_unit_token(band, encoder);
  for (double& v : token) v *= measurement;
  return token;
}

UsrToken usr_encode(double measurement, const Band& band, const EncodingParams& params) {
  return usr_encode(measurement, band, SinusoidEncoder(params));
}

double band_probe(std::span<const double> token, double lambda_nm, const SinusoidEncoder& encoder) {
  if (token.size() != static_cast<std::size_t>(encoder.dim()))
    throw_data("band_probe: token has dimension " + std::to_string(token.size()) + ", encoding has " +
               std::to_string(encoder.dim()));
  const auto freqs = encoder.frequencies();
  double sum = 0.0;
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    const double a = lambda_nm * freqs[k];
    sum += token[2 * k] * std::sin(a) + token[2 * k + 1] * std::cos(a);
  }
  return sum;
}

double band_probe(std::span<const double> token, double lambda_nm, const EncodingParams& params) {
  return band_probe(token, lambda_nm, SinusoidEncoder(params));
}

std::vector<ProbePoint> probe_sweep(std::span<const double> token, double from_nm, double to_nm, double step_nm,
                                    const SinusoidEncoder& encoder) {
  if (!(step_nm > 0.0) || !(from_nm <= to_nm)) throw_usage("probe sweep needs from <= to and step > 0");
  const auto count = static_cast<std::size_t>(std::floor((to_nm - from_nm) / step_nm + 1e-9)) + 1;
  std::vector<ProbePoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double lambda = from_nm + static_cast<double>(i) * step_nm;
    out.push_back({lambda, band_probe(token, lambda, encoder)});
  }
  return out;
}

}  // namespace usr
