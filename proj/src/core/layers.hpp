// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Dense building blocks with explicit forward caches and backward passes.
// Activations are row-major in the sense that one row is one token/sample.
// Backward functions accumulate parameter gradients into a same-shaped
// gradient struct and return the gradient with respect to the input.
// Every parameter gradient is formed in a temporary and added with a single
// `+=`, so accumulating pixel by pixel is bit-identical to summing per-pixel
// buffers in the same order.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "core/rng.hpp"

namespace usr::nn {

using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

struct Linear {
  Mat w;  // in x out
  Mat b;  // 1 x out
};

struct LayerNorm {
  Mat gamma;  // 1 x d
  Mat beta;   // 1 x d
};

struct Attention {
  Linear q, k, v, o;
};

struct EncoderBlock {
  LayerNorm ln1;
  Attention attn;
  LayerNorm ln2;
  Linear ff1, ff2;
};

struct Encoder {
  Linear input;
  std::vector<EncoderBlock> blocks;
  LayerNorm final_norm;
  Linear project;
};

// MLP used for the branch and trunk nets. With `gated`, two encoder streams
// U, V of the input modulate every hidden layer: H <- Z*U + (1-Z)*V.
struct Subnet {
  bool gated = true;
  Linear enc_u, enc_v;  // empty when !gated
  std::vector<Linear> hidden;
  Linear out;
};

struct Decoder {
  Subnet branch, trunk;
  Mat bias;  // 1 x 1
};

// Visits every tensor in a fixed order with a dotted name. Works for const
// and mutable structs alike.
template <class L, class F>
void visit(L& l, const std::string& p, F& f)
  requires std::is_same_v<std::remove_const_t<L>, Linear>
{
  f(p + ".w", l.w);
  f(p + ".b", l.b);
}
template <class L, class F>
void visit(L& l, const std::string& p, F& f)
  requires std::is_same_v<std::remove_const_t<L>, LayerNorm>
{
  f(p + ".gamma", l.gamma);
  f(p + ".beta", l.beta);
}
template <class L, class F>
void visit(L& l, const std::string& p, F& f)
  requires std::is_same_v<std::remove_const_t<L>, EncoderBlock>
{
  visit(l.ln1, p + ".ln1", f);
  visit(l.attn.q, p + ".attn.q", f);
  visit(l.attn.k, p + ".attn.k", f);
  visit(l.attn.v, p + ".attn.v", f);
  visit(l.attn.o, p + ".attn.o", f);
  visit(l.ln2, p + ".ln2", f);
  visit(l.ff1, p + ".ff1", f);
  visit(l.ff2, p + ".ff2", f);
}
template <class L, class F>
void visit(L& l, const std::string& p, F& f)
  requires std::is_same_v<std::remove_const_t<L>, Encoder>
{
  visit(l.input, p + ".input", f);
  for (std::size_t i = 0; i < l.blocks.size(); ++i) visit(l.blocks[i], p + ".block" + std::to_string(i), f);
  visit(l.final_norm, p + ".final_norm", f);
  visit(l.project, p + ".project", f);
}
template <class L, class F>
void visit(L& l, const std::string& p, F& f)
  requires std::is_same_v<std::remove_const_t<L>, Subnet>
{
  if (l.gated) {
    visit(l.enc_u, p + ".enc_u", f);
    visit(l.enc_v, p + ".enc_v", f);
  }
  for (std::size_t i = 0; i < l.hidden.size(); ++i) visit(l.hidden[i], p + ".hidden" + std::to_string(i), f);
  visit(l.out, p + ".out", f);
}
template <class L, class F>
void visit(L& l, const std::string& p, F& f)
  requires std::is_same_v<std::remove_const_t<L>, Decoder>
{
  visit(l.branch, p + ".branch", f);
  visit(l.trunk, p + ".trunk", f);
  f(p + ".bias", l.bias);
}

Linear make_linear(int in, int out, Rng& rng);
LayerNorm make_layer_norm(int dim);
EncoderBlock make_encoder_block(int dim, int ff_dim, Rng& rng);
Subnet make_subnet(int in, int hidden, int layers, int out, bool gated, Rng& rng);

// Same shapes, all zeros.
Linear zeros_like(const Linear& l);

// --- Linear -----------------------------------------------------------------
Mat linear_forward(const Linear& p, const Mat& x);
Mat linear_backward(const Linear& p, Linear& g, const Mat& x, const Mat& dy);
void linear_backward_params(Linear& g, const Mat& x, const Mat& dy);

// --- LayerNorm --------------------------------------------------------------
inline constexpr double kLayerNormEps = 1e-5;

struct LayerNormCache {
  Mat xhat;
  Eigen::VectorXd inv_std;
};
Mat layer_norm_forward(const LayerNorm& p, const Mat& x, LayerNormCache* cache);
Mat layer_norm_backward(const LayerNorm& p, LayerNorm& g, const LayerNormCache& cache, const Mat& dy);

// --- GELU (tanh form) -------------------------------------------------------
Mat gelu(const Mat& x);
Mat gelu_backward(const Mat& x, const Mat& dy);

// --- Multi-head self-attention (no positional terms) -------------------------
struct AttentionCache {
  Mat x, q, k, v, concat;
  std::vector<Mat> probs;
};
Mat attention_forward(const Attention& p, int heads, const Mat& x, AttentionCache* cache);
Mat attention_backward(const Attention& p, Attention& g, int heads, const AttentionCache& cache, const Mat& dy);

// --- Transformer block (pre-norm) -------------------------------------------
struct BlockCache {
  LayerNormCache ln1, ln2;
  AttentionCache attn;
  Mat ln2_out, ff_pre, ff_act;
};
Mat block_forward(const EncoderBlock& p, int heads, const Mat& x, BlockCache* cache);
Mat block_backward(const EncoderBlock& p, EncoderBlock& g, int heads, const BlockCache& cache, const Mat& dy);

// --- Decoder subnet -----------------------------------------------------------
struct SubnetCache {
  Mat x, u, v;
  std::vector<Mat> h_in;  // input of each hidden layer
  std::vector<Mat> z;     // activation of each hidden layer
  Mat h_out;
};
Mat subnet_forward(const Subnet& p, const Mat& x, SubnetCache* cache);
// Returns dx when want_dx, otherwise an empty matrix.
Mat subnet_backward(const Subnet& p, Subnet& g, const SubnetCache& cache, const Mat& dy, bool want_dx);

}  // namespace usr::nn
