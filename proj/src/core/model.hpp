// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/layers.hpp"
#include "core/rng.hpp"
#include "core/sensors.hpp"
#include "core/spectral.hpp"
#include "core/usr.hpp"

namespace usr {

using nn::Mat;
using nn::RowVec;

struct EncoderConfig {
  int layers = 3;
  int hidden_dim = 250;
  int heads = 10;
  int embed_dim = 3;
  int token_dim = 200;
  int ff_multiplier = 4;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

enum class TrunkInput { RawNormalizedWavelength, SinusoidEncoding };
enum class DecoderArch { ModifiedMlp, PlainMlp };

struct DecoderConfig {
  int layers = 3;
  int hidden_dim = 200;  // also the branch/trunk output width
  TrunkInput trunk_input = TrunkInput::SinusoidEncoding;
  DecoderArch architecture = DecoderArch::ModifiedMlp;

  void validate() const;
  bool operator==(const DecoderConfig&) const = default;
};

struct ModelConfig {
  EncodingParams encoding;
  EncoderConfig encoder;
  DecoderConfig decoder;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct ModelWeights {
  nn::Encoder encoder;
  nn::Decoder decoder;
};

template <class W, class F>
void visit_weights(W& w, F&& f) {
  nn::visit(w.encoder, "encoder", f);
  nn::visit(w.decoder, "decoder", f);
}

ModelWeights zeros_like(const ModelWeights& w);
std::size_t parameter_count(const ModelWeights& w);

struct EncoderCache {
  Mat tokens;
  std::vector<nn::BlockCache> blocks;
  nn::LayerNormCache final_norm;
  Mat pooled;
};

// Tokens (T x token_dim) -> embedding (1 x embed_dim). Self-attention carries
// no positional terms and pooling is a mean, so the result does not depend on
// token order.
RowVec encoder_forward(const nn::Encoder& enc, int heads, const Mat& tokens, EncoderCache* cache);
void encoder_backward(const nn::Encoder& enc, nn::Encoder& grad, int heads, const EncoderCache& cache,
                      const RowVec& d_embedding);

class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t init_seed);
  Model(const ModelConfig& config, ModelWeights weights, std::uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  std::uint64_t init_seed() const { return init_seed_; }
  const ModelWeights& weights() const { return weights_; }
  ModelWeights& weights() { return weights_; }
  const SinusoidEncoder& wavelength_encoder() const { return encoder_; }

  // Rows are the unit tokens of each band (k x token_dim).
  Mat unit_tokens(const SensorSpec& sensor) const;
  Mat tokens(const SensorSample& sample) const;
  Mat tokens(const SensorSample& sample, const Mat& unit_tokens) const;

  RowVec encode(const Mat& tokens) const;
  RowVec encode(std::span<const UsrToken> tokens) const;

  Mat trunk_features(std::span<const double> wavelengths_nm) const;
  // G x p trunk activations, shared by every pixel on the same query grid.
  Mat trunk_output(const Mat& features) const;
  // Reconstructions for a batch of embeddings (B x embed_dim) -> B x G.
  Mat decode_batch(const Mat& embeddings, const Mat& trunk_out) const;
  double decode(const RowVec& embedding, double lambda_nm) const;
  std::vector<double> decode(const RowVec& embedding, std::span<const double> wavelengths_nm) const;

  // convolve -> tokenize -> encode -> decode on the input grid.
  RowVec embed(const Spectrum& spectrum, const SensorSpec& sensor) const;
  Spectrum forward(const Spectrum& spectrum, const SensorSpec& sensor) const;

 private:
  ModelConfig config_;
  std::uint64_t init_seed_;
  SinusoidEncoder encoder_;
  ModelWeights weights_;
};

// Mean over the batch of loss_scale * cosine_dissimilarity(target_b, y_b),
// where y = decode(encode(tokens_b)) on the trunk grid. Accumulates exact
// gradients into `grads` when non-null.
double reconstruction_loss(const Model& model, const std::vector<Mat>& tokens, const Mat& targets,
                           const Mat& trunk_features, ModelWeights* grads, double loss_scale = 1.0);

struct GradientCheckEntry {
  std::string tensor;
  Eigen::Index row = 0, col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradientCheckReport {
  std::vector<GradientCheckEntry> entries;
  double max_relative_error = 0.0;
  double loss = 0.0;
  std::size_t parameter_count = 0;
};

// |a - n| / max(|a|, |n|, floor): a pure ratio for gradients well above the
// finite-difference noise level, absolute error scaled by 1/floor below it.
inline constexpr double kGradCheckFloor = 1e-5;

GradientCheckReport gradient_check(const Model& model, const std::vector<Mat>& tokens, const Mat& targets,
                                   const Mat& trunk_features, std::size_t samples, double step, Rng& rng);

// n=16, hidden 8, heads 2, embed 2.
ModelConfig tiny_model_config();

std::string to_string(TrunkInput t);
std::string to_string(DecoderArch a);
TrunkInput trunk_input_from_string(const std::string& s);
DecoderArch decoder_arch_from_string(const std::string& s);

}  // namespace usr
