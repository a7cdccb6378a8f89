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

// Layers shared by every network in the acoustic model.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cantor/autograd.hpp"

namespace cantor::nn {

using ag::Var;

/// Ordered, named collection of trainable leaves. Names are unique and
/// become checkpoint block names.
class ParamSet {
 public:
  Var add(const std::string& name, Tensor init);
  const std::vector<std::pair<std::string, Var>>& entries() const {
    return entries_;
  }
  Var find(const std::string& name) const;
  void zero_grad();
  std::size_t scalar_count() const;
  /// FNV-1a over the raw parameter bytes; used to prove a set stayed frozen.
  std::uint64_t checksum() const;

 private:
  std::vector<std::pair<std::string, Var>> entries_;
};

/// Training-time context threaded through forward passes.
struct Context {
  bool training = false;
  Rng* rng = nullptr;  // required when training
};

class Linear {
 public:
  Linear() = default;
  Linear(ParamSet& ps, const std::string& name, int in, int out, Rng& rng,
         bool bias = true);
  Var operator()(const Var& x) const;
  const Var& weight() const { return w_; }
  const Var& bias() const { return b_; }
  int in() const { return in_; }
  int out() const { return out_; }

 private:
  Var w_, b_;
  int in_ = 0, out_ = 0;
};

class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ParamSet& ps, const std::string& name, int in, int out, int kernel,
         Rng& rng, int dilation = 1, int stride = 1, bool bias = true);
  Var operator()(const Var& x) const;
  int dilation() const { return dilation_; }
  int kernel() const { return kernel_; }

 private:
  Var w_, b_;
  int kernel_ = 1, dilation_ = 1, stride_ = 1;
};

class Embedding {
 public:
  Embedding() = default;
  Embedding(ParamSet& ps, const std::string& name, int count, int dim,
            Rng& rng);
  Var operator()(std::span<const int> ids) const;
  int count() const { return table_.rows(); }
  const Var& table() const { return table_; }

 private:
  Var table_;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamSet& ps, const std::string& name, int dim);
  Var operator()(const Var& x) const;

 private:
  Var gamma_, beta_;
};

/// Sinusoidal position table, rows = positions. position(i) = offset + i*step.
Tensor sinusoidal_positions(int length, int dim, double step = 1.0,
                            double offset = 0.0);
/// Single-row sinusoidal embedding of a scalar (diffusion step).
Tensor sinusoidal_embedding(double value, int dim);

struct Attention {
  Var output;   // Tq x dv
  Var weights;  // Tq x Tk
};

/// Softmax(Q K^T / sqrt(d)) V with d = cols(Q). Keys at index >= key_valid
/// are masked out (key_valid < 0 means all valid).
Attention scaled_dot_attention(const Var& q, const Var& k, const Var& v,
                               int key_valid = -1);

class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamSet& ps, const std::string& name, int dim, int heads,
                     Rng& rng);
  Var operator()(const Var& query, const Var& memory, int key_valid = -1) const;

 private:
  Linear q_, k_, v_, o_;
  int heads_ = 1;
};

/// Feed-forward transformer block: self-attention then a conv feed-forward,
/// each wrapped as LayerNorm(x + sublayer(x)). Rows >= valid are zeroed.
class FFTBlock {
 public:
  FFTBlock() = default;
  FFTBlock(ParamSet& ps, const std::string& name, int dim, int filter,
           int kernel, int heads, double dropout, Rng& rng);
  Var operator()(const Var& x, int valid, const Context& ctx) const;

 private:
  MultiHeadAttention attn_;
  LayerNorm ln1_, ln2_;
  Conv1d ff1_, ff2_;
  double dropout_ = 0.0;
};

/// Zeroes rows >= valid. Identity when valid covers all rows.
Var mask_rows(const Var& x, int valid);

struct WaveNetConfig {
  int residual = 64;
  int cond_dim = 64;
  int layers = 12;
  int kernel = 3;
  int dilation_cycle = 4;
};

/// Non-causal gated residual stack with per-layer conditioning and
/// diffusion-step injection. Input and output projections belong to the
/// caller.
class WaveNet {
 public:
  WaveNet() = default;
  WaveNet(ParamSet& ps, const std::string& name, const WaveNetConfig& cfg,
          Rng& rng);
  /// h: T x residual, cond: T x cond_dim, step: 1 x residual.
  Var operator()(const Var& h, const Var& cond, const Var& step) const;
  std::vector<int> dilations() const;
  /// Radius (in frames) over which a conditioning impulse can travel.
  int conditioning_radius() const;
  const WaveNetConfig& config() const { return cfg_; }

 private:
  struct Layer {
    Linear step_proj;
    Conv1d dilated, cond_proj, out_proj;
  };
  WaveNetConfig cfg_;
  std::vector<Layer> layers_;
  Conv1d skip_proj_;
};

/// Diffusion step embedding MLP: sinusoid -> Linear -> relu -> Linear.
class StepEmbedding {
 public:
  StepEmbedding() = default;
  StepEmbedding(ParamSet& ps, const std::string& name, int dim, Rng& rng);
  Var operator()(int t) const;

 private:
  Linear l1_, l2_;
  int dim_ = 0;
};

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  int warmup_steps = 1000;
  double clip_norm = 1.0;  // <= 0 disables clipping
};

class Adam {
 public:
  Adam(const ParamSet& params, AdamConfig cfg);
  /// Applies one update from the accumulated gradients; returns the global
  /// gradient norm before clipping.
  double step();
  long steps_taken() const { return t_; }
  double current_lr() const;
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  void set_steps(long t) { t_ = t; }

 private:
  const ParamSet* params_;
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  long t_ = 0;
};

}  // namespace cantor::nn
