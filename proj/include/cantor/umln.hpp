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

// Conditional layer normalisation with batch-uncertainty perturbation of the
// style-derived scale and bias.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cantor/nn.hpp"

namespace cantor {

using ag::Var;

struct UmlnConfig {
  double p = 0.5;      // probability of taking the perturbed branch
  double eps = 1e-5;
};

/// Per-channel biased variance across rows: (1/B) sum_b (v_b - mean(v))^2.
Var uncertainty(const Var& v);

/// Noise overrides for tests; each is B x C.
struct UmlnNoise {
  Tensor eps_gamma, eps_beta;
};

class Umln {
 public:
  Umln() = default;
  /// gamma starts near one (bias 1), beta near zero.
  Umln(nn::ParamSet& ps, const std::string& name, int style_dim, int channels,
       Rng& rng, UmlnConfig cfg = {});

  struct ScaleBias {
    Var gamma, beta;  // B x C
  };
  /// style: B x style_dim.
  ScaleBias style_scale_bias(const Var& style) const;

  /// x[b]: T_b x C, style: B x style_dim. Returns x unchanged outside
  /// training or when the per-call uniform draw exceeds p; otherwise
  /// gamma_um * (x - mu) / (sigma + eps) + beta_um per position.
  std::vector<Var> operator()(const std::vector<Var>& x, const Var& style,
                              const nn::Context& ctx,
                              const std::optional<UmlnNoise>& noise = {}) const;

  nn::Linear& gamma_map() { return gamma_; }
  nn::Linear& beta_map() { return beta_; }
  const UmlnConfig& config() const { return cfg_; }
  void set_config(const UmlnConfig& cfg) { cfg_ = cfg; }

 private:
  nn::Linear gamma_, beta_;
  UmlnConfig cfg_;
};

/// Number of forward calls that took the perturbed branch, process-wide.
long umln_perturb_count();

}  // namespace cantor
