// Copyright (c) 2026 The Cantor Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cantor/nn.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace cantor::nn {
namespace {

Tensor uniform_init(int rows, int cols, double limit, Rng& rng) {
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-limit, limit);
  return t;
}

}  // namespace

Var ParamSet::add(const std::string& name, Tensor init) {
  for (const auto& [n, v] : entries_)
    if (n == name) throw std::logic_error("duplicate parameter name " + name);
  Var v = ag::parameter(std::move(init));
  entries_.emplace_back(name, v);
  return v;
}

Var ParamSet::find(const std::string& name) const {
  for (const auto& [n, v] : entries_)
    if (n == name) return v;
  throw std::out_of_range("no parameter named " + name);
}

void ParamSet::zero_grad() {
  for (auto& [n, v] : entries_) v.zero_grad();
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, v] : entries_) n += v.value().size();
  return n;
}

std::uint64_t ParamSet::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& [name, v] : entries_) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(v.value().data());
    for (std::size_t i = 0; i < v.value().size() * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

Linear::Linear(ParamSet& ps, const std::string& name, int in, int out,
               Rng& rng, bool bias)
    : in_(in), out_(out) {
  const double limit = std::sqrt(6.0 / (in + out));
  w_ = ps.add(name + ".weight", uniform_init(in, out, limit, rng));
  if (bias) b_ = ps.add(name + ".bias", Tensor(1, out));
}

Var Linear::operator()(const Var& x) const {
  Var y = ag::matmul(x, w_);
  return b_ ? ag::add_row(y, b_) : y;
}

Conv1d::Conv1d(ParamSet& ps, const std::string& name, int in, int out,
               int kernel, Rng& rng, int dilation, int stride, bool bias)
    : kernel_(kernel), dilation_(dilation), stride_(stride) {
  const double limit = std::sqrt(3.0 / (kernel * in));
  w_ = ps.add(name + ".weight", uniform_init(kernel * in, out, limit, rng));
  if (bias) b_ = ps.add(name + ".bias", Tensor(1, out));
}

Var Conv1d::operator()(const Var& x) const {
  Var y = ag::conv1d(x, w_, kernel_, dilation_, stride_);
  return b_ ? ag::add_row(y, b_) : y;
}

Embedding::Embedding(ParamSet& ps, const std::string& name, int count, int dim,
                     Rng& rng) {
  table_ = ps.add(name + ".table", rng.normal_tensor(count, dim, 1.0 / std::sqrt(dim)));
}

Var Embedding::operator()(std::span<const int> ids) const {
  return ag::gather_rows(table_, ids);
}

LayerNorm::LayerNorm(ParamSet& ps, const std::string& name, int dim) {
  gamma_ = ps.add(name + ".gamma", Tensor(1, dim, 1.0));
  beta_ = ps.add(name + ".beta", Tensor(1, dim));
}

Var LayerNorm::operator()(const Var& x) const {
  return ag::add_row(ag::mul_row(ag::normalize_rows(x, 1e-5), gamma_), beta_);
}

Tensor sinusoidal_positions(int length, int dim, double step, double offset) {
  Tensor pe(length, dim);
  const int half = dim / 2;
  for (int i = 0; i < length; ++i) {
    const double pos = offset + step * i;
    for (int j = 0; j < half; ++j) {
      const double freq = std::exp(-std::log(10000.0) * j / std::max(half, 1));
      pe(i, j) = std::sin(pos * freq);
      pe(i, half + j) = std::cos(pos * freq);
    }
  }
  return pe;
}

Tensor sinusoidal_embedding(double value, int dim) {
  return sinusoidal_positions(1, dim, 1.0, value);
}

Attention scaled_dot_attention(const Var& q, const Var& k, const Var& v,
                               int key_valid) {
  if (q.cols() != k.cols())
    throw std::invalid_argument("attention: query/key width mismatch");
  if (k.rows() != v.rows())
    throw std::invalid_argument("attention: key/value length mismatch");
  if (k.rows() == 0) throw std::invalid_argument("attention: empty memory");
  Var scores = ag::scale(ag::matmul_nt(q, k), 1.0 / std::sqrt(q.cols()));
  if (key_valid >= 0 && key_valid < k.rows()) {
    Tensor mask(q.rows(), k.rows());
    for (int i = 0; i < q.rows(); ++i)
      for (int j = key_valid; j < k.rows(); ++j) mask(i, j) = -1e9;
    scores = ag::add(scores, ag::constant(std::move(mask)));
  }
  Var w = ag::softmax_rows(scores);
  return {ag::matmul(w, v), w};
}

MultiHeadAttention::MultiHeadAttention(ParamSet& ps, const std::string& name,
                                       int dim, int heads, Rng& rng)
    : q_(ps, name + ".q", dim, dim, rng),
      k_(ps, name + ".k", dim, dim, rng),
      v_(ps, name + ".v", dim, dim, rng),
      o_(ps, name + ".o", dim, dim, rng),
      heads_(heads) {
  if (dim % heads != 0)
    throw std::invalid_argument("attention dim must divide by head count");
}

Var MultiHeadAttention::operator()(const Var& query, const Var& memory,
                                   int key_valid) const {
  Var q = q_(query), k = k_(memory), v = v_(memory);
  const int dh = q.cols() / heads_;
  std::vector<Var> outs;
  outs.reserve(heads_);
  for (int h = 0; h < heads_; ++h) {
    outs.push_back(scaled_dot_attention(ag::slice_cols(q, h * dh, dh),
                                        ag::slice_cols(k, h * dh, dh),
                                        ag::slice_cols(v, h * dh, dh),
                                        key_valid)
                       .output);
  }
  return o_(heads_ == 1 ? outs[0] : ag::concat_cols(outs));
}

Var mask_rows(const Var& x, int valid) {
  if (valid < 0 || valid >= x.rows()) return x;
  Tensor m(x.rows(), 1);
  for (int i = 0; i < valid; ++i) m(i, 0) = 1.0;
  return ag::mul_col(x, ag::constant(std::move(m)));
}

FFTBlock::FFTBlock(ParamSet& ps, const std::string& name, int dim, int filter,
                   int kernel, int heads, double dropout, Rng& rng)
    : attn_(ps, name + ".attn", dim, heads, rng),
      ln1_(ps, name + ".ln1", dim),
      ln2_(ps, name + ".ln2", dim),
      ff1_(ps, name + ".ff1", dim, filter, kernel, rng),
      ff2_(ps, name + ".ff2", filter, dim, 1, rng),
      dropout_(dropout) {}

Var FFTBlock::operator()(const Var& x, int valid, const Context& ctx) const {
  auto drop = [&](const Var& v) {
    return ctx.training ? ag::dropout(v, dropout_, *ctx.rng) : v;
  };
  Var a = drop(attn_(x, x, valid));
  Var h = mask_rows(ln1_(ag::add(x, a)), valid);
  Var f = drop(ff2_(ag::relu(ff1_(h))));
  return mask_rows(ln2_(ag::add(h, f)), valid);
}

WaveNet::WaveNet(ParamSet& ps, const std::string& name,
                 const WaveNetConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  const auto dil = dilations();
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = name + ".layer" + std::to_string(l);
    Layer layer;
    layer.step_proj = Linear(ps, p + ".step", cfg.residual, cfg.residual, rng);
    layer.dilated = Conv1d(ps, p + ".dilated", cfg.residual, 2 * cfg.residual,
                           cfg.kernel, rng, dil[l]);
    layer.cond_proj = Conv1d(ps, p + ".cond", cfg.cond_dim, 2 * cfg.residual, 1, rng);
    layer.out_proj = Conv1d(ps, p + ".out", cfg.residual, 2 * cfg.residual, 1, rng);
    layers_.push_back(std::move(layer));
  }
  skip_proj_ = Conv1d(ps, name + ".skip", cfg.residual, cfg.residual, 1, rng);
}

std::vector<int> WaveNet::dilations() const {
  std::vector<int> d(cfg_.layers);
  for (int l = 0; l < cfg_.layers; ++l) d[l] = 1 << (l % cfg_.dilation_cycle);
  return d;
}

int WaveNet::conditioning_radius() const {
  // Conditioning joins after each layer's dilated conv, so layer 0's copy
  // only spreads through the convs of layers 1..L-1.
  const auto d = dilations();
  int r = 0;
  for (int l = 1; l < cfg_.layers; ++l) r += d[l] * (cfg_.kernel - 1) / 2;
  return r;
}

Var WaveNet::operator()(const Var& h, const Var& cond, const Var& step) const {
  if (cond.rows() != h.rows())
    throw std::invalid_argument("wavenet: condition has " +
                                std::to_string(cond.rows()) + " frames, input " +
                                std::to_string(h.rows()));
  const int r = cfg_.residual;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Var x = h;
  Var skip;
  for (const auto& layer : layers_) {
    Var y = ag::add_row(x, layer.step_proj(step));
    Var z = ag::add(layer.dilated(y), layer.cond_proj(cond));
    Var gated = ag::mul(ag::sigmoid(ag::slice_cols(z, 0, r)),
                        ag::tanh(ag::slice_cols(z, r, r)));
    Var o = layer.out_proj(gated);
    x = ag::scale(ag::add(x, ag::slice_cols(o, 0, r)), inv_sqrt2);
    Var s = ag::slice_cols(o, r, r);
    skip = skip ? ag::add(skip, s) : s;
  }
  skip = ag::scale(skip, 1.0 / std::sqrt(static_cast<double>(layers_.size())));
  return ag::relu(skip_proj_(skip));
}

StepEmbedding::StepEmbedding(ParamSet& ps, const std::string& name, int dim,
                             Rng& rng)
    : l1_(ps, name + ".l1", dim, 2 * dim, rng),
      l2_(ps, name + ".l2", 2 * dim, dim, rng),
      dim_(dim) {}

Var StepEmbedding::operator()(int t) const {
  return l2_(ag::relu(l1_(ag::constant(sinusoidal_embedding(t, dim_)))));
}

Adam::Adam(const ParamSet& params, AdamConfig cfg)
    : params_(&params), cfg_(cfg) {
  for (const auto& [name, v] : params.entries()) {
    m_.emplace_back(v.rows(), v.cols());
    v_.emplace_back(v.rows(), v.cols());
  }
}

double Adam::current_lr() const {
  if (cfg_.warmup_steps <= 0) return cfg_.lr;
  return cfg_.lr * std::min(1.0, static_cast<double>(t_) / cfg_.warmup_steps);
}

double Adam::step() {
  const auto& entries = params_->entries();
  double sq = 0.0;
  for (const auto& [name, v] : entries)
    if (v.has_grad()) sq += v.grad().mat().squaredNorm();
  const double norm = std::sqrt(sq);
  const double clip =
      (cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm) ? cfg_.clip_norm / norm : 1.0;
  ++t_;
  const double lr = current_lr();
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Var v = entries[i].second;
    Tensor& value = v.mutable_value();
    Tensor& m = m_[i];
    Tensor& s = v_[i];
    const bool has = v.has_grad();
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = has ? v.grad()[j] * clip : 0.0;
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
      s[j] = cfg_.beta2 * s[j] + (1.0 - cfg_.beta2) * g * g;
      value[j] -= lr * (m[j] / bc1) / (std::sqrt(s[j] / bc2) + cfg_.eps);
    }
  }
  return norm;
}

}  // namespace cantor::nn
