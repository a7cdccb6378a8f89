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

#include "cantor/rsa.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cantor {

ConvStyleEncoder::ConvStyleEncoder(nn::ParamSet& ps, const std::string& name,
                                   int mel_bins, const RsaConfig& cfg,
                                   Rng& rng)
    : f0_embed_(ps, name + ".f0_embed", 2, cfg.f0_embed, rng) {
  int in = mel_bins + cfg.f0_embed;
  for (int l = 0; l < cfg.conv_layers; ++l) {
    const int stride = l < 2 ? 2 : 1;
    convs_.emplace_back(ps, name + ".conv" + std::to_string(l), in, cfg.hidden,
                        cfg.kernel, rng, 1, stride);
    in = cfg.hidden;
  }
}

Var ConvStyleEncoder::operator()(const Var& mel, const Var& pitch) const {
  if (mel.rows() != pitch.rows())
    throw std::invalid_argument("reference mel and pitch differ in frames: " +
                                std::to_string(mel.rows()) + " vs " +
                                std::to_string(pitch.rows()));
  if (pitch.cols() != 2)
    throw std::invalid_argument("reference pitch must be T x 2");
  std::vector<Var> parts{mel, f0_embed_(pitch)};
  Var h = ag::concat_cols(parts);
  for (std::size_t l = 0; l < convs_.size(); ++l) {
    h = convs_[l](h);
    if (l + 1 < convs_.size()) h = ag::relu(h);
  }
  return h;
}

RqCodebooks::RqCodebooks(int depth, int size, int dim, Rng& rng) {
  for (int n = 0; n < depth; ++n) {
    codes.push_back(rng.normal_tensor(size, dim, 0.1));
    ema_count.emplace_back(size, 1);
    ema_sum.emplace_back(size, dim);
    stale.emplace_back(size, 0);
    initialized.push_back(0);
  }
}

RqResult rq_quantize(const Tensor& e, const RqCodebooks& books) {
  if (e.cols() != books.dim())
    throw std::invalid_argument("rq_quantize: width " + std::to_string(e.cols()) +
                                " does not match codebooks " +
                                std::to_string(books.dim()));
  RqResult out;
  Tensor residual = e;
  Tensor partial(e.rows(), e.cols());
  for (int n = 0; n < books.depth(); ++n) {
    const Tensor& cb = books.codes[n];
    std::vector<int> pick(e.rows());
    for (int t = 0; t < e.rows(); ++t) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int k = 0; k < cb.rows(); ++k) {
        double d = 0.0;
        for (int c = 0; c < cb.cols(); ++c) {
          const double diff = residual(t, c) - cb(k, c);
          d += diff * diff;
        }
        if (d < best_d) best_d = d, best = k;
      }
      pick[t] = best;
      for (int c = 0; c < cb.cols(); ++c) {
        partial(t, c) += cb(best, c);
        residual(t, c) = e(t, c) - partial(t, c);
      }
    }
    out.codes.push_back(std::move(pick));
    out.partial.push_back(partial);
    out.residual.push_back(residual);
  }
  return out;
}

Var commitment_loss(const Var& e, const RqResult& result) {
  Var total = ag::constant(Tensor::scalar(0.0));
  for (const Tensor& p : result.partial)
    total = ag::add(total, ag::sum(ag::square(ag::sub(e, ag::constant(p)))));
  return total;
}

Var straight_through(const Var& e, const RqResult& result) {
  if (result.partial.empty()) return e;
  Tensor delta = result.partial.back();
  delta.mat() -= e.value().mat();
  return ag::add(e, ag::constant(std::move(delta)));
}

void codebook_update(RqCodebooks& books, const std::vector<Tensor>& e,
                     const std::vector<RqResult>& results, double decay,
                     int stale_limit, Rng& rng) {
  if (e.size() != results.size())
    throw std::invalid_argument("codebook_update: batch size mismatch");
  int rows = 0;
  for (const auto& x : e) rows += x.rows();
  if (rows == 0) return;
  const int size = books.size(), dim = books.dim();

  for (int n = 0; n < books.depth(); ++n) {
    // Residual entering depth n for every row of the batch.
    auto input_row = [&](std::size_t b, int t, int c) {
      return n == 0 ? e[b](t, c) : results[b].residual[n - 1](t, c);
    };
    auto random_row = [&](Tensor& dst, int k) {
      int pick = rng.randint(0, rows - 1);
      for (std::size_t b = 0; b < e.size(); ++b) {
        if (pick < e[b].rows()) {
          for (int c = 0; c < dim; ++c) dst(k, c) = input_row(b, pick, c);
          return;
        }
        pick -= e[b].rows();
      }
    };

    Tensor& code = books.codes[n];
    Tensor& count = books.ema_count[n];
    Tensor& sum = books.ema_sum[n];
    if (!books.initialized[n]) {
      for (int k = 0; k < size; ++k) {
        random_row(code, k);
        for (int c = 0; c < dim; ++c) code(k, c) += 1e-3 * rng.normal();
      }
      count.fill(0.0);
      sum.fill(0.0);
      std::fill(books.stale[n].begin(), books.stale[n].end(), 0);
      books.initialized[n] = 1;
      continue;
    }

    Tensor batch_count(size, 1), batch_sum(size, dim);
    for (std::size_t b = 0; b < e.size(); ++b)
      for (int t = 0; t < e[b].rows(); ++t) {
        const int k = results[b].codes[n][t];
        batch_count(k, 0) += 1.0;
        for (int c = 0; c < dim; ++c) batch_sum(k, c) += input_row(b, t, c);
      }
    for (int k = 0; k < size; ++k) {
      count(k, 0) = decay * count(k, 0) + (1.0 - decay) * batch_count(k, 0);
      for (int c = 0; c < dim; ++c)
        sum(k, c) = decay * sum(k, c) + (1.0 - decay) * batch_sum(k, c);
      if (batch_count(k, 0) > 0.0) {
        books.stale[n][k] = 0;
        for (int c = 0; c < dim; ++c) code(k, c) = sum(k, c) / count(k, 0);
      } else if (++books.stale[n][k] >= stale_limit) {
        random_row(code, k);
        count(k, 0) = 0.0;
        for (int c = 0; c < dim; ++c) sum(k, c) = 0.0;
        books.stale[n][k] = 0;
      }
    }
  }
}

double code_usage_entropy(const std::vector<RqResult>& results, int depth,
                          int size) {
  std::vector<double> hist(size, 0.0);
  double total = 0.0;
  for (const auto& r : results)
    for (int k : r.codes.at(depth)) hist[k] += 1.0, total += 1.0;
  double h = 0.0;
  for (double c : hist)
    if (c > 0.0) h -= c / total * std::log(c / total);
  return h;
}

nn::Attention align_attention(const Var& query, const Var& keys,
                              const Var& values) {
  if (keys.rows() == 0 || values.rows() == 0)
    throw std::invalid_argument("align_attention: empty reference");
  return nn::scaled_dot_attention(query, keys, values);
}

AlignAttention::AlignAttention(nn::ParamSet& ps, const std::string& name,
                               int dim, int layers, int heads, int ref_stride,
                               Rng& rng)
    : dim_(dim), ref_stride_(ref_stride) {
  for (int l = 0; l < layers; ++l)
    layers_.emplace_back(ps, name + ".attn" + std::to_string(l), dim, heads,
                         rng);
}

Var AlignAttention::operator()(const Var& content, const Var& detail,
                               int offset) const {
  if (detail.rows() == 0)
    throw std::invalid_argument("align_attention: empty reference");
  if (content.cols() != dim_ || detail.cols() != dim_)
    throw std::invalid_argument("align_attention: width mismatch");
  Var memory = ag::add(detail, ag::constant(nn::sinusoidal_positions(
                                   detail.rows(), dim_, ref_stride_)));
  Var h = ag::add(content,
                  ag::constant(nn::sinusoidal_positions(content.rows(), dim_, 1.0,
                                                       offset)));
  Var total;
  for (const auto& attn : layers_) {
    Var a = attn(h, memory);
    h = ag::add(h, a);
    total = total.node() ? ag::add(total, a) : a;
  }
  return total;
}

Var style_specific_rep(const Var& content, const Var& aligned,
                       const Var& timbre, const Var& emotion) {
  if (content.rows() != aligned.rows() || content.cols() != aligned.cols() ||
      timbre.cols() != content.cols() || emotion.cols() != content.cols() ||
      timbre.rows() != 1 || emotion.rows() != 1)
    throw std::invalid_argument("style_specific_rep: dimension mismatch");
  return ag::add_row(ag::add(content, aligned), ag::add(timbre, emotion));
}

}  // namespace cantor
