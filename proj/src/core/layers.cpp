// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/layers.hpp"

#include <cmath>
#include <numbers>

namespace usr::nn {

Linear make_linear(int in, int out, Rng& rng) {
  // Uniform fan-in scaling (unit-variance preserving), zero bias.
  const double limit = std::sqrt(3.0 / in);
  Linear l{Mat(in, out), Mat::Zero(1, out)};
  for (Eigen::Index j = 0; j < l.w.cols(); ++j)
    for (Eigen::Index i = 0; i < l.w.rows(); ++i) l.w(i, j) = rng.uniform(-limit, limit);
  return l;
}

LayerNorm make_layer_norm(int dim) { return {Mat::Ones(1, dim), Mat::Zero(1, dim)}; }

EncoderBlock make_encoder_block(int dim, int ff_dim, Rng& rng) {
  EncoderBlock b;
  b.ln1 = make_layer_norm(dim);
  b.attn.q = make_linear(dim, dim, rng);
  b.attn.k = make_linear(dim, dim, rng);
  b.attn.v = make_linear(dim, dim, rng);
  b.attn.o = make_linear(dim, dim, rng);
  b.ln2 = make_layer_norm(dim);
  b.ff1 = make_linear(dim, ff_dim, rng);
  b.ff2 = make_linear(ff_dim, dim, rng);
  return b;
}

Subnet make_subnet(int in, int hidden, int layers, int out, bool gated, Rng& rng) {
  Subnet s;
  s.gated = gated;
  if (gated) {
    s.enc_u = make_linear(in, hidden, rng);
    s.enc_v = make_linear(in, hidden, rng);
  }
  int width = in;
  for (int l = 0; l < layers; ++l) {
    s.hidden.push_back(make_linear(width, hidden, rng));
    width = hidden;
  }
  s.out = make_linear(width, out, rng);
  return s;
}

Linear zeros_like(const Linear& l) { return {Mat::Zero(l.w.rows(), l.w.cols()), Mat::Zero(1, l.b.cols())}; }

// --- Linear -----------------------------------------------------------------

Mat linear_forward(const Linear& p, const Mat& x) {
  Mat y = x * p.w;
  y.rowwise() += p.b.row(0);
  return y;
}

void linear_backward_params(Linear& g, const Mat& x, const Mat& dy) {
  const Mat dw = x.transpose() * dy;
  g.w += dw;
  const Mat db = dy.colwise().sum();
  g.b += db;
}

Mat linear_backward(const Linear& p, Linear& g, const Mat& x, const Mat& dy) {
  linear_backward_params(g, x, dy);
  return dy * p.w.transpose();
}

// --- LayerNorm --------------------------------------------------------------

Mat layer_norm_forward(const LayerNorm& p, const Mat& x, LayerNormCache* cache) {
  const auto d = static_cast<double>(x.cols());
  Mat xhat(x.rows(), x.cols());
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).sum() / d;
    const RowVec centered = x.row(i).array() - mean;
    const double var = centered.squaredNorm() / d;
    inv_std(i) = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(i) = centered * inv_std(i);
  }
  Mat y = xhat.array().rowwise() * p.gamma.row(0).array();
  y.rowwise() += p.beta.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Mat layer_norm_backward(const LayerNorm& p, LayerNorm& g, const LayerNormCache& c, const Mat& dy) {
  const Mat dgamma = (dy.array() * c.xhat.array()).colwise().sum();
  g.gamma += dgamma;
  const Mat dbeta = dy.colwise().sum();
  g.beta += dbeta;
  const Mat dxhat = dy.array().rowwise() * p.gamma.row(0).array();
  const auto d = static_cast<double>(dy.cols());
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double sum_d = dxhat.row(i).sum();
    const double sum_dx = dxhat.row(i).dot(c.xhat.row(i));
    dx.row(i) = (c.inv_std(i) / d) * (d * dxhat.row(i).array() - sum_d - c.xhat.row(i).array() * sum_dx);
  }
  return dx;
}

// --- GELU -------------------------------------------------------------------

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Mat gelu(const Mat& x) {
  return x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  });
}

Mat gelu_backward(const Mat& x, const Mat& dy) {
  const Mat dg = x.unaryExpr([](double v) {
    const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
    return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
  });
  return dy.cwiseProduct(dg);
}

// --- Attention --------------------------------------------------------------

namespace {

void softmax_rows(Mat& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double m = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - m).exp();
    s.row(i) /= s.row(i).sum();
  }
}

}  // namespace

Mat attention_forward(const Attention& p, int heads, const Mat& x, AttentionCache* cache) {
  const Eigen::Index dim = p.q.w.cols();
  const Eigen::Index dh = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat q = linear_forward(p.q, x);
  Mat k = linear_forward(p.k, x);
  Mat v = linear_forward(p.v, x);
  Mat concat(x.rows(), dim);
  std::vector<Mat> probs;
  if (cache) probs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const auto cols = Eigen::seqN(h * dh, dh);
    Mat s = (q(Eigen::all, cols) * k(Eigen::all, cols).transpose()) * scale;
    softmax_rows(s);
    concat(Eigen::all, cols) = s * v(Eigen::all, cols);
    if (cache) probs.push_back(std::move(s));
  }
  Mat out = linear_forward(p.o, concat);
  if (cache) {
    cache->x = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->concat = std::move(concat);
    cache->probs = std::move(probs);
  }
  return out;
}

Mat attention_backward(const Attention& p, Attention& g, int heads, const AttentionCache& c, const Mat& dy) {
  const Eigen::Index dim = p.q.w.cols();
  const Eigen::Index dh = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Mat dconcat = linear_backward(p.o, g.o, c.concat, dy);
  Mat dq(c.q.rows(), dim), dk(c.k.rows(), dim), dv(c.v.rows(), dim);
  for (int h = 0; h < heads; ++h) {
    const auto cols = Eigen::seqN(h * dh, dh);
    const Mat& prob = c.probs[static_cast<std::size_t>(h)];
    const Mat d_out = dconcat(Eigen::all, cols);
    const Mat dprob = d_out * c.v(Eigen::all, cols).transpose();
    dv(Eigen::all, cols) = prob.transpose() * d_out;
    const Eigen::VectorXd row_dot = (dprob.array() * prob.array()).rowwise().sum();
    Mat ds = prob.array() * (dprob.colwise() - row_dot).array();
    ds *= scale;
    dq(Eigen::all, cols) = ds * c.k(Eigen::all, cols);
    dk(Eigen::all, cols) = ds.transpose() * c.q(Eigen::all, cols);
  }
  Mat dx = linear_backward(p.q, g.q, c.x, dq);
  dx += linear_backward(p.k, g.k, c.x, dk);
  dx += linear_backward(p.v, g.v, c.x, dv);
  return dx;
}

// --- Block ------------------------------------------------------------------

Mat block_forward(const EncoderBlock& p, int heads, const Mat& x, BlockCache* cache) {
  const Mat a = layer_norm_forward(p.ln1, x, cache ? &cache->ln1 : nullptr);
  Mat h = x + attention_forward(p.attn, heads, a, cache ? &cache->attn : nullptr);
  Mat b = layer_norm_forward(p.ln2, h, cache ? &cache->ln2 : nullptr);
  Mat pre = linear_forward(p.ff1, b);
  Mat act = gelu(pre);
  h += linear_forward(p.ff2, act);
  if (cache) {
    cache->ln2_out = std::move(b);
    cache->ff_pre = std::move(pre);
    cache->ff_act = std::move(act);
  }
  return h;
}

Mat block_backward(const EncoderBlock& p, EncoderBlock& g, int heads, const BlockCache& c, const Mat& dy) {
  // y = h + ff(ln2(h)), h = x + attn(ln1(x))
  const Mat dact = linear_backward(p.ff2, g.ff2, c.ff_act, dy);
  const Mat dpre = gelu_backward(c.ff_pre, dact);
  const Mat db = linear_backward(p.ff1, g.ff1, c.ln2_out, dpre);
  const Mat dh = dy + layer_norm_backward(p.ln2, g.ln2, c.ln2, db);
  const Mat da = attention_backward(p.attn, g.attn, heads, c.attn, dh);
  return dh + layer_norm_backward(p.ln1, g.ln1, c.ln1, da);
}

// --- Subnet -----------------------------------------------------------------

Mat subnet_forward(const Subnet& p, const Mat& x, SubnetCache* cache) {
  Mat u, v;
  if (p.gated) {
    u = linear_forward(p.enc_u, x).array().tanh();
    v = linear_forward(p.enc_v, x).array().tanh();
  }
  Mat h = x;
  if (cache) {
    cache->h_in.clear();
    cache->z.clear();
  }
  for (const Linear& layer : p.hidden) {
    Mat z = linear_forward(layer, h).array().tanh();
    if (cache) cache->h_in.push_back(h);
    if (p.gated) {
      h = z.cwiseProduct(u) + (Mat::Ones(z.rows(), z.cols()) - z).cwiseProduct(v);
    } else {
      h = z;
    }
    if (cache) cache->z.push_back(std::move(z));
  }
  Mat y = linear_forward(p.out, h);
  if (cache) {
    cache->x = x;
    cache->u = std::move(u);
    cache->v = std::move(v);
    cache->h_out = std::move(h);
  }
  return y;
}

Mat subnet_backward(const Subnet& p, Subnet& g, const SubnetCache& c, const Mat& dy, bool want_dx) {
  Mat dh = linear_backward(p.out, g.out, c.h_out, dy);
  Mat du, dv;
  if (p.gated) {
    du = Mat::Zero(c.u.rows(), c.u.cols());
    dv = Mat::Zero(c.v.rows(), c.v.cols());
  }
  for (std::size_t l = p.hidden.size(); l-- > 0;) {
    const Mat& z = c.z[l];
    Mat dz;
    if (p.gated) {
      dz = dh.cwiseProduct(c.u - c.v);
      du += dh.cwiseProduct(z);
      dv += dh.cwiseProduct(Mat::Ones(z.rows(), z.cols()) - z);
    } else {
      dz = dh;
    }
    const Mat dpre = dz.array() * (1.0 - z.array().square());
    if (l == 0 && !want_dx && !p.gated) {
      linear_backward_params(g.hidden[l], c.h_in[l], dpre);
      dh.resize(0, 0);
    } else {
      dh = linear_backward(p.hidden[l], g.hidden[l], c.h_in[l], dpre);
    }
  }
  if (p.gated) {
    const Mat du_pre = du.array() * (1.0 - c.u.array().square());
    const Mat dv_pre = dv.array() * (1.0 - c.v.array().square());
    if (want_dx) {
      dh += linear_backward(p.enc_u, g.enc_u, c.x, du_pre);
      dh += linear_backward(p.enc_v, g.enc_v, c.x, dv_pre);
    } else {
      linear_backward_params(g.enc_u, c.x, du_pre);
      linear_backward_params(g.enc_v, c.x, dv_pre);
    }
  }
  if (!want_dx) return Mat();
  return dh;
}

}  // namespace usr::nn
