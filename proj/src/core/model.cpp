// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"

namespace usr {

void EncoderConfig::validate() const {
  if (layers < 1) throw_usage("encoder.layers must be >= 1");
  if (hidden_dim < 1 || heads < 1) throw_usage("encoder.hidden_dim and encoder.heads must be >= 1");
  if (hidden_dim % heads != 0)
    throw_usage("encoder.hidden_dim (" + std::to_string(hidden_dim) + ") must be divisible by encoder.heads (" +
                std::to_string(heads) + ")");
  if (embed_dim < 1) throw_usage("encoder.embed_dim must be >= 1");
  if (token_dim < 1) throw_usage("encoder.token_dim must be >= 1");
  if (ff_multiplier < 1) throw_usage("encoder.ff_multiplier must be >= 1");
}

void DecoderConfig::validate() const {
  if (layers < 1) throw_usage("decoder.layers must be >= 1");
  if (hidden_dim < 1) throw_usage("decoder.hidden_dim must be >= 1");
}

void ModelConfig::validate() const {
  encoding.validate();
  encoder.validate();
  decoder.validate();
  if (encoder.token_dim != encoding.n)
    throw_usage("encoder.token_dim (" + std::to_string(encoder.token_dim) + ") must equal encoding.n (" +
                std::to_string(encoding.n) + ")");
}

ModelConfig tiny_model_config() {
  ModelConfig c;
  c.encoding.n = 16;
  c.encoder = {2, 8, 2, 2, 16, 2};
  c.decoder.layers = 2;
  c.decoder.hidden_dim = 8;
  return c;
}

std::string to_string(TrunkInput t) {
  return t == TrunkInput::SinusoidEncoding ? "sinusoid_encoding" : "raw_normalized_wavelength";
}
std::string to_string(DecoderArch a) { return a == DecoderArch::ModifiedMlp ? "modified_mlp" : "plain_mlp"; }

TrunkInput trunk_input_from_string(const std::string& s) {
  if (s == "sinusoid_encoding") return TrunkInput::SinusoidEncoding;
  if (s == "raw_normalized_wavelength") return TrunkInput::RawNormalizedWavelength;
  throw_usage("decoder.trunk_input: unknown value '" + s + "'");
}

DecoderArch decoder_arch_from_string(const std::string& s) {
  if (s == "modified_mlp") return DecoderArch::ModifiedMlp;
  if (s == "plain_mlp") return DecoderArch::PlainMlp;
  throw_usage("decoder.architecture: unknown value '" + s + "'");
}

ModelWeights zeros_like(const ModelWeights& w) {
  ModelWeights z = w;
  visit_weights(z, [](const std::string&, Mat& m) { m.setZero(); });
  return z;
}

std::size_t parameter_count(const ModelWeights& w) {
  std::size_t n = 0;
  visit_weights(w, [&](const std::string&, const Mat& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

// --- Encoder ----------------------------------------------------------------

RowVec encoder_forward(const nn::Encoder& enc, int heads, const Mat& tokens, EncoderCache* cache) {
  if (tokens.rows() < 1) throw_data("encode: empty token list");
  if (tokens.cols() != enc.input.w.rows())
    throw_data("encode: token dimension " + std::to_string(tokens.cols()) + ", model expects " +
               std::to_string(enc.input.w.rows()));
  Mat h = nn::linear_forward(enc.input, tokens);
  if (cache) {
    cache->tokens = tokens;
    cache->blocks.resize(enc.blocks.size());
  }
  for (std::size_t i = 0; i < enc.blocks.size(); ++i)
    h = nn::block_forward(enc.blocks[i], heads, h, cache ? &cache->blocks[i] : nullptr);
  const Mat f = nn::layer_norm_forward(enc.final_norm, h, cache ? &cache->final_norm : nullptr);
  const Mat pooled = f.colwise().mean();
  if (cache) cache->pooled = pooled;
  return nn::linear_forward(enc.project, pooled);
}

void encoder_backward(const nn::Encoder& enc, nn::Encoder& grad, int heads, const EncoderCache& cache,
                      const RowVec& d_embedding) {
  const Mat dpooled = nn::linear_backward(enc.project, grad.project, cache.pooled, d_embedding);
  const Eigen::Index t = cache.tokens.rows();
  const Mat df = dpooled.replicate(t, 1) / static_cast<double>(t);
  Mat dh = nn::layer_norm_backward(enc.final_norm, grad.final_norm, cache.final_norm, df);
  for (std::size_t i = enc.blocks.size(); i-- > 0;)
    dh = nn::block_backward(enc.blocks[i], grad.blocks[i], heads, cache.blocks[i], dh);
  nn::linear_backward_params(grad.input, cache.tokens, dh);
}

// --- Model ------------------------------------------------------------------

namespace {

ModelWeights init_weights(const ModelConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  ModelWeights w;
  const auto& e = cfg.encoder;
  w.encoder.input = nn::make_linear(e.token_dim, e.hidden_dim, rng);
  for (int i = 0; i < e.layers; ++i)
    w.encoder.blocks.push_back(nn::make_encoder_block(e.hidden_dim, e.hidden_dim * e.ff_multiplier, rng));
  w.encoder.final_norm = nn::make_layer_norm(e.hidden_dim);
  w.encoder.project = nn::make_linear(e.hidden_dim, e.embed_dim, rng);

  const auto& d = cfg.decoder;
  const bool gated = d.architecture == DecoderArch::ModifiedMlp;
  const int trunk_in = d.trunk_input == TrunkInput::SinusoidEncoding ? cfg.encoding.n : 1;
  w.decoder.branch = nn::make_subnet(e.embed_dim, d.hidden_dim, d.layers, d.hidden_dim, gated, rng);
  w.decoder.trunk = nn::make_subnet(trunk_in, d.hidden_dim, d.layers, d.hidden_dim, gated, rng);
  w.decoder.bias = Mat::Zero(1, 1);
  return w;
}

void check_shapes(const ModelConfig& cfg, const ModelWeights& w) {
  const ModelWeights ref = init_weights(cfg, 0);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> a, b;
  visit_weights(ref, [&](const std::string&, const Mat& m) { a.emplace_back(m.rows(), m.cols()); });
  visit_weights(w, [&](const std::string&, const Mat& m) { b.emplace_back(m.rows(), m.cols()); });
  if (a != b) throw_data("model weights do not match the configured shapes");
  bool finite = true;
  visit_weights(w, [&](const std::string&, const Mat& m) { finite = finite && m.allFinite(); });
  if (!finite) throw_numeric("model weights contain non-finite values");
}

}  // namespace

Model::Model(const ModelConfig& config, std::uint64_t init_seed)
    : config_(config), init_seed_(init_seed), encoder_(config.encoding) {
  config_.validate();
  weights_ = init_weights(config_, init_seed);
}

Model::Model(const ModelConfig& config, ModelWeights weights, std::uint64_t init_seed)
    : config_(config), init_seed_(init_seed), encoder_(config.encoding), weights_(std::move(weights)) {
  config_.validate();
  check_shapes(config_, weights_);
}

Mat Model::unit_tokens(const SensorSpec& sensor) const {
  Mat out(static_cast<Eigen::Index>(sensor.bands.size()), config_.encoding.n);
  for (std::size_t i = 0; i < sensor.bands.size(); ++i) {
    const UsrToken t = band_unit_token(sensor.bands[i], encoder_);
    out.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const RowVec>(t.data(), static_cast<Eigen::Index>(t.size()));
  }
  return out;
}

Mat Model::tokens(const SensorSample& sample, const Mat& unit) const {
  if (static_cast<std::size_t>(unit.rows()) != sample.measurements.size())
    throw_data("tokens: unit token count does not match the measurements");
  Mat out = unit;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double r = sample.measurements[static_cast<std::size_t>(i)];
    if (!std::isfinite(r)) throw_data("tokens: measurement is not finite");
    out.row(i) *= r;
  }
  return out;
}

Mat Model::tokens(const SensorSample& sample) const { return tokens(sample, unit_tokens(sample.sensor)); }

RowVec Model::encode(const Mat& tokens) const {
  return encoder_forward(weights_.encoder, config_.encoder.heads, tokens, nullptr);
}

RowVec Model::encode(std::span<const UsrToken> tokens) const {
  if (tokens.empty()) throw_data("encode: empty token list");
  Mat m(static_cast<Eigen::Index>(tokens.size()), config_.encoder.token_dim);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].size() != static_cast<std::size_t>(config_.encoder.token_dim))
      throw_data("encode: token " + std::to_string(i) + " has dimension " + std::to_string(tokens[i].size()) +
                 ", model expects " + std::to_string(config_.encoder.token_dim));
    m.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const RowVec>(tokens[i].data(), static_cast<Eigen::Index>(tokens[i].size()));
  }
  return encode(m);
}

Mat Model::trunk_features(std::span<const double> wl) const {
  if (config_.decoder.trunk_input == TrunkInput::SinusoidEncoding) {
    Mat f(static_cast<Eigen::Index>(wl.size()), config_.encoding.n);
    std::vector<double> row(static_cast<std::size_t>(config_.encoding.n));
    for (std::size_t i = 0; i < wl.size(); ++i) {
      encoder_.encode(wl[i], row);
      f.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const RowVec>(row.data(), static_cast<Eigen::Index>(row.size()));
    }
    return f;
  }
  Mat f(static_cast<Eigen::Index>(wl.size()), 1);
  for (std::size_t i = 0; i < wl.size(); ++i) {
    if (!std::isfinite(wl[i])) throw_data("decode: wavelength is not finite");
    f(static_cast<Eigen::Index>(i), 0) = (wl[i] - 350.0) / 700.0;
  }
  return f;
}

Mat Model::trunk_output(const Mat& features) const {
  return nn::subnet_forward(weights_.decoder.trunk, features, nullptr);
}

Mat Model::decode_batch(const Mat& embeddings, const Mat& trunk_out) const {
  if (!embeddings.allFinite()) throw_data("decode: embedding is not finite");
  const Mat b = nn::subnet_forward(weights_.decoder.branch, embeddings, nullptr);
  Mat y = b * trunk_out.transpose();
  y.array() += weights_.decoder.bias(0, 0);
  return y;
}

std::vector<double> Model::decode(const RowVec& embedding, std::span<const double> wl) const {
  const Mat y = decode_batch(embedding, trunk_output(trunk_features(wl)));
  return std::vector<double>(y.data(), y.data() + y.size());
}

double Model::decode(const RowVec& embedding, double lambda_nm) const {
  const double wl[1] = {lambda_nm};
  return decode(embedding, std::span<const double>(wl, 1))[0];
}

RowVec Model::embed(const Spectrum& spectrum, const SensorSpec& sensor) const {
  const ClippedSensor clipped = clip_to_range(sensor, spectrum.grid());
  return encode(tokens(convolve(spectrum, clipped.sensor)));
}

Spectrum Model::forward(const Spectrum& spectrum, const SensorSpec& sensor) const {
  const RowVec e = embed(spectrum, sensor);
  return Spectrum(spectrum.grid(), decode(e, spectrum.grid().points()));
}

// --- Loss -------------------------------------------------------------------

double reconstruction_loss(const Model& model, const std::vector<Mat>& tokens, const Mat& targets,
                           const Mat& trunk_features, ModelWeights* grads, double loss_scale) {
  const auto batch = static_cast<Eigen::Index>(tokens.size());
  if (batch == 0) throw_data("reconstruction_loss: empty batch");
  if (targets.rows() != batch || targets.cols() != trunk_features.rows())
    throw_data("reconstruction_loss: target shape does not match batch and query grid");
  const ModelWeights& w = model.weights();
  const int heads = model.config().encoder.heads;
  const bool train = grads != nullptr;

  std::vector<EncoderCache> enc_cache(train ? tokens.size() : 0);
  Mat emb(batch, model.config().encoder.embed_dim);
  for (Eigen::Index b = 0; b < batch; ++b)
    emb.row(b) = encoder_forward(w.encoder, heads, tokens[static_cast<std::size_t>(b)],
                                 train ? &enc_cache[static_cast<std::size_t>(b)] : nullptr);

  nn::SubnetCache branch_cache, trunk_cache;
  const Mat bo = nn::subnet_forward(w.decoder.branch, emb, train ? &branch_cache : nullptr);
  const Mat to = nn::subnet_forward(w.decoder.trunk, trunk_features, train ? &trunk_cache : nullptr);
  Mat y = bo * to.transpose();
  y.array() += w.decoder.bias(0, 0);

  double loss = 0.0;
  Mat dy(batch, y.cols());
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const double tt = targets.row(b).squaredNorm();
    const double yy = y.row(b).squaredNorm();
    if (!(tt > 0.0)) throw_data("reconstruction_loss: zero-norm target spectrum");
    if (!(yy > 0.0) || !std::isfinite(yy)) throw_numeric("reconstruction_loss: degenerate reconstruction");
    const double tn = std::sqrt(tt), yn = std::sqrt(yy);
    const double c = targets.row(b).dot(y.row(b)) / (tn * yn);
    loss += loss_scale * (1.0 - c) * inv_b;
    // d(1 - cos)/dy = -(t / (|t||y|) - cos * y / |y|^2)
    dy.row(b) = -loss_scale * inv_b * (targets.row(b) / (tn * yn) - (c / yy) * y.row(b));
  }
  if (!std::isfinite(loss)) throw_numeric("reconstruction_loss: non-finite loss");
  if (!train) return loss;

  const Mat dbias = dy.colwise().sum().rowwise().sum();
  grads->decoder.bias += dbias;
  const Mat d_bo = dy * to;
  const Mat d_to = dy.transpose() * bo;
  const Mat d_emb = nn::subnet_backward(w.decoder.branch, grads->decoder.branch, branch_cache, d_bo, true);
  nn::subnet_backward(w.decoder.trunk, grads->decoder.trunk, trunk_cache, d_to, false);
  for (Eigen::Index b = 0; b < batch; ++b)
    encoder_backward(w.encoder, grads->encoder, heads, enc_cache[static_cast<std::size_t>(b)], d_emb.row(b));
  return loss;
}

GradientCheckReport gradient_check(const Model& model, const std::vector<Mat>& tokens, const Mat& targets,
                                   const Mat& features, std::size_t samples, double step, Rng& rng) {
  GradientCheckReport report;
  ModelWeights grads = zeros_like(model.weights());
  report.loss = reconstruction_loss(model, tokens, targets, features, &grads);

  struct Slot {
    std::string name;
    Eigen::Index size;
  };
  std::vector<Slot> slots;
  visit_weights(model.weights(), [&](const std::string& name, const Mat& m) { slots.push_back({name, m.size()}); });
  std::size_t total = 0;
  for (const auto& s : slots) total += static_cast<std::size_t>(s.size);
  report.parameter_count = total;

  // Distinct flat indices, drawn by partial shuffle.
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t n = std::min(samples, total);
  for (std::size_t i = 0; i < n; ++i) std::swap(order[i], order[i + rng.uniform_index(total - i)]);
  order.resize(n);
  std::sort(order.begin(), order.end());

  Model probe = model;
  for (std::size_t flat : order) {
    std::size_t offset = flat;
    std::size_t slot = 0;
    while (offset >= static_cast<std::size_t>(slots[slot].size)) offset -= static_cast<std::size_t>(slots[slot++].size);
    Mat* param = nullptr;
    const Mat* grad = nullptr;
    std::size_t k = 0;
    visit_weights(probe.weights(), [&](const std::string&, Mat& m) {
      if (k++ == slot) param = &m;
    });
    k = 0;
    visit_weights(grads, [&](const std::string&, const Mat& m) {
      if (k++ == slot) grad = &m;
    });
    double& value = param->data()[offset];
    const double saved = value;
    value = saved + step;
    const double up = reconstruction_loss(probe, tokens, targets, features, nullptr);
    value = saved - step;
    const double down = reconstruction_loss(probe, tokens, targets, features, nullptr);
    value = saved;

    GradientCheckEntry e;
    e.tensor = slots[slot].name;
    e.row = static_cast<Eigen::Index>(offset) % param->rows();
    e.col = static_cast<Eigen::Index>(offset) / param->rows();
    e.analytic = grad->data()[offset];
    e.numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(e.analytic), std::abs(e.numeric), kGradCheckFloor});
    e.relative_error = std::abs(e.analytic - e.numeric) / denom;
    report.max_relative_error = std::max(report.max_relative_error, e.relative_error);
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace usr
