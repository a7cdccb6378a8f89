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

// Few-step mel decoder that predicts clean data directly, trained with MAE
// and SSIM on min-max normalised mels.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cantor/corpus.hpp"
#include "cantor/diffusion.hpp"
#include "cantor/nn.hpp"

namespace cantor {

using ag::Var;

struct DecoderConfig {
  int cond_dim = 256;
  int residual = 256;
  int layers = 20;
  int dilation_cycle = 4;
  int steps = 4;
  double beta_min = 0.1;
  double beta_max = 20.0;
};

/// Global min-max map of log-mel values into [0, 1].
struct MelRange {
  double lo = -11.5;
  double hi = 2.0;
  Tensor normalize(const Tensor& mel) const;    // clamped to [0, 1]
  Tensor denormalize(const Tensor& x) const;
};
MelRange compute_mel_range(const std::vector<SingingSample>& corpus);

struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double c1 = 1e-4;  // (0.01 L)^2 with L = 1
  double c2 = 9e-4;  // (0.03 L)^2
};

/// Mean local SSIM of two images in [0, 1] with a separable Gaussian window.
/// Near the borders the window is truncated and renormalised. Throws
/// std::invalid_argument when inputs leave [0, 1] by more than 1e-6.
Var ssim(const Var& x, const Var& y, const SsimConfig& cfg = {});

/// Mean absolute error.
Var mae_loss(const Var& pred, const Var& target);

class MelDecoder {
 public:
  struct Losses {
    Var mae, ssim;
  };

  MelDecoder() = default;
  MelDecoder(nn::ParamSet& ps, const std::string& name,
             const DecoderConfig& cfg, Rng& rng);

  /// x_t: T x 80, cond: T x cond_dim. Returns the clean estimate in [0, 1].
  Var denoise(const Tensor& x_t, int t, const Var& cond) const;
  /// target: normalised mel. t drawn uniformly from [1, steps] unless given.
  Losses train_step(const Tensor& target, const Var& cond, Rng& rng,
                    std::optional<int> t = {}) const;
  /// Reverse process; returns the final clean estimate (normalised).
  Tensor infer(const Var& cond, Rng& rng) const;
  const diffusion::Schedule& schedule() const { return sched_; }
  const nn::WaveNet& wavenet() const { return net_; }

 private:
  nn::Linear in_, out_;
  nn::StepEmbedding step_;
  nn::WaveNet net_;
  diffusion::Schedule sched_;
};

}  // namespace cantor
