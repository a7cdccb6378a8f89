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

// Reference style adaptor: strided conv encoder, residual quantisation with
// EMA codebooks, and content-to-reference alignment attention.

#pragma once

#include <string>
#include <vector>

#include "cantor/nn.hpp"

namespace cantor {

using ag::Var;

struct RsaConfig {
  int hidden = 256;
  int conv_layers = 5;
  int kernel = 5;
  int f0_embed = 32;
  int rq_depth = 4;
  int rq_codes = 128;
  int attn_layers = 2;
  int attn_heads = 2;
  double ema_decay = 0.99;
  int stale_limit = 100;
};

/// Reference encoder over [mel || f0 embedding]. The first two layers use
/// stride 2, so T_ref frames become ceil(ceil(T_ref / 2) / 2) = ceil(T_ref / 4).
class ConvStyleEncoder {
 public:
  ConvStyleEncoder() = default;
  ConvStyleEncoder(nn::ParamSet& ps, const std::string& name, int mel_bins,
                   const RsaConfig& cfg, Rng& rng);
  /// mel: T x bins, pitch: T x 2 (normalised log-F0, uv).
  Var operator()(const Var& mel, const Var& pitch) const;
  std::vector<nn::Conv1d>& convs() { return convs_; }

 private:
  nn::Linear f0_embed_;
  std::vector<nn::Conv1d> convs_;
};

/// N ordered codebooks with EMA cluster statistics.
struct RqCodebooks {
  std::vector<Tensor> codes;       // N x (K x D)
  std::vector<Tensor> ema_count;   // N x (K x 1)
  std::vector<Tensor> ema_sum;     // N x (K x D)
  std::vector<std::vector<int>> stale;  // steps since last assignment
  std::vector<int> initialized;    // per depth: seeded from data yet

  RqCodebooks() = default;
  RqCodebooks(int depth, int size, int dim, Rng& rng);
  int depth() const { return static_cast<int>(codes.size()); }
  int size() const { return codes.empty() ? 0 : codes[0].rows(); }
  int dim() const { return codes.empty() ? 0 : codes[0].cols(); }
};

struct RqResult {
  std::vector<std::vector<int>> codes;  // N x T
  std::vector<Tensor> partial;          // E-hat^n, n = 1..N
  std::vector<Tensor> residual;         // r_n = E - E-hat^n
};

/// Greedy nearest-code search per depth on the running residual; ties go to
/// the lowest index.
RqResult rq_quantize(const Tensor& e, const RqCodebooks& books);

/// sum_n ||E - sg[E-hat^n]||^2 over depths, positions and channels.
Var commitment_loss(const Var& e, const RqResult& result);

/// E + sg[E-hat^N - E]: quantised forward value, identity gradient.
Var straight_through(const Var& e, const RqResult& result);

/// EMA k-means step. Inputs are the pre-quantisation rows E of a batch and
/// their quantisation results. Only assigned codes move; a code left unused
/// for stale_limit calls is re-seeded from a random residual of the batch.
/// The first call at each depth seeds all codes from that depth's residuals.
void codebook_update(RqCodebooks& books, const std::vector<Tensor>& e,
                     const std::vector<RqResult>& results, double decay,
                     int stale_limit, Rng& rng);

/// Entropy (nats) of code usage at one depth over a set of results.
double code_usage_entropy(const std::vector<RqResult>& results, int depth,
                          int size);

/// Single-head softmax(q k^T / sqrt(d)) v. Throws std::invalid_argument on
/// an empty reference.
nn::Attention align_attention(const Var& query, const Var& keys,
                              const Var& values);

/// Stacked multi-head alignment of frame-level content onto the quantised
/// reference. Reference positions are encoded at their frame-rate location
/// (index * 4) so that they share the query's positional scale.
class AlignAttention {
 public:
  AlignAttention() = default;
  AlignAttention(nn::ParamSet& ps, const std::string& name, int dim,
                 int layers, int heads, int ref_stride, Rng& rng);
  /// content: T x D, detail: T_ref x D. Returns T x D, the sum of all layer
  /// outputs (residual stream minus its input). offset is the frame index of
  /// the first content row, for windows cut from a longer sequence.
  Var operator()(const Var& content, const Var& detail, int offset = 0) const;

 private:
  std::vector<nn::MultiHeadAttention> layers_;
  int dim_ = 0, ref_stride_ = 4;
};

/// E_c + aligned + E_t + E_e, with the two style vectors broadcast over time.
Var style_specific_rep(const Var& content, const Var& aligned,
                       const Var& timbre, const Var& emotion);

}  // namespace cantor
