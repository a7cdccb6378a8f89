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

// Gaussian and multinomial diffusion processes over a shared discrete
// schedule. Time steps are 1-based; index 0 denotes clean data.

#pragma once

#include <functional>
#include <vector>

#include "cantor/autograd.hpp"
#include "cantor/rng.hpp"

namespace cantor::diffusion {

using ag::Var;

class Schedule {
 public:
  Schedule() = default;
  explicit Schedule(std::vector<double> betas);

  /// T steps with beta linear from beta_1 to beta_T.
  static Schedule linear(int steps, double beta_1, double beta_T);
  /// beta_i = 1 - exp(-b_min / T - (b_max - b_min)(2i - 1) / (2 T^2)).
  static Schedule vpsde(int steps, double b_min, double b_max);

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const;
  double alpha(int t) const;
  /// Cumulative product; alpha_bar(0) = 1.
  double alpha_bar(int t) const;
  /// Signal coefficient of the x0-parameterised decoder: sqrt(alpha_bar).
  double signal_scale(int t) const;
  /// DDPM posterior variance (1 - abar_{t-1}) / (1 - abar_t) * beta_t.
  double posterior_variance(int t) const;
  /// beta_t^2 / (2 sigma_t^2 alpha_t (1 - abar_t)), with sigma_1^2 taken as
  /// sigma_2^2 because the posterior variance vanishes at t = 1.
  double loss_weight(int t) const;
  /// Coefficients (c0, ct) of the posterior mean c0 * x0 + ct * x_t.
  std::pair<double, double> posterior_mean_coefs(int t) const;

 private:
  void check(int t) const;
  std::vector<double> betas_, alpha_bars_;
};

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
Tensor gaussian_forward(const Tensor& x0, int t, const Tensor& eps,
                        const Schedule& s);

/// One forward kernel step: sqrt(1 - beta_t) x_{t-1} + sqrt(beta_t) eps.
Tensor gaussian_step(const Tensor& x_prev, int t, const Tensor& eps,
                     const Schedule& s);

/// weight(t) * mean((eps - eps_pred)^2), or the plain mean when
/// weighted is false.
Var gaussian_loss(const Tensor& eps, const Var& eps_pred, int t,
                  const Schedule& s, bool weighted = true);

/// Posterior q(x_{t-1} | x_t, x0) sample (mean plus sigma_t z; no noise at
/// t = 1).
Tensor gaussian_posterior_sample(const Tensor& x_t, const Tensor& x0, int t,
                                 const Schedule& s, Rng& rng);

/// One ancestral step x_t -> x_{t-1} given the noise prediction.
Tensor gaussian_reverse_step(const Tensor& x_t, const Tensor& eps_pred, int t,
                             const Schedule& s, Rng& rng);

using EpsPredictor = std::function<Tensor(const Tensor& x_t, int t)>;

/// Ancestral sampling from x_T down to x_0 with the eps parameterisation.
/// Throws std::runtime_error naming the step when the predictor emits NaN.
Tensor sample_reverse_gaussian(const EpsPredictor& predictor, Tensor x_T,
                               const Schedule& s, Rng& rng);

// --- multinomial ------------------------------------------------------------
// Distributions are rows of a T x K tensor.

/// Throws std::invalid_argument unless every row is a probability vector.
void check_simplex(const Tensor& p, double tol = 1e-9);

/// (1 - beta) y_prev + beta / K.
Tensor multinomial_forward(const Tensor& y_prev, double beta);

/// abar_t y0 + (1 - abar_t) / K.
Tensor multinomial_marginal(const Tensor& y0, int t, const Schedule& s);

/// Normalised [alpha_t y_t + (1 - alpha_t)/K] * [abar_{t-1} y0 +
/// (1 - abar_{t-1})/K]. Requires t >= 1.
Tensor multinomial_posterior(const Tensor& y_t, const Tensor& y0, int t,
                             const Schedule& s);

/// KL(q(y_{t-1}|y_t, y0_true) || q(y_{t-1}|y_t, softmax(logits))) averaged
/// over rows for t >= 2; cross-entropy of softmax(logits) against y0_true at
/// t = 1.
Var multinomial_loss(const Tensor& y0_true, const Var& logits,
                     const Tensor& y_t, int t, const Schedule& s);

/// One categorical draw per row.
Tensor sample_categorical(const Tensor& probs, Rng& rng);

/// One-hot rows from class indices.
Tensor one_hot(const std::vector<int>& classes, int k);

}  // namespace cantor::diffusion
