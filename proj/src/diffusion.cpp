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

#include "cantor/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cantor::diffusion {

Schedule::Schedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw std::invalid_argument("empty noise schedule");
  double abar = 1.0;
  for (double b : betas_) {
    if (!(b >= 0.0 && b < 1.0))
      throw std::invalid_argument("schedule betas must lie in [0, 1)");
    abar *= 1.0 - b;
    alpha_bars_.push_back(abar);
  }
}

Schedule Schedule::linear(int steps, double beta_1, double beta_T) {
  std::vector<double> b(steps);
  for (int i = 0; i < steps; ++i)
    b[i] = steps == 1 ? beta_1
                      : beta_1 + (beta_T - beta_1) * i / (steps - 1.0);
  return Schedule(std::move(b));
}

Schedule Schedule::vpsde(int steps, double b_min, double b_max) {
  std::vector<double> b(steps);
  const double n = steps;
  for (int i = 1; i <= steps; ++i)
    b[i - 1] = 1.0 - std::exp(-b_min / n -
                              (b_max - b_min) * (2.0 * i - 1.0) / (2.0 * n * n));
  return Schedule(std::move(b));
}

void Schedule::check(int t) const {
  if (t < 1 || t > steps())
    throw std::out_of_range("diffusion step " + std::to_string(t) +
                            " outside [1, " + std::to_string(steps()) + "]");
}

double Schedule::beta(int t) const {
  check(t);
  return betas_[t - 1];
}
double Schedule::alpha(int t) const { return 1.0 - beta(t); }
double Schedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  check(t);
  return alpha_bars_[t - 1];
}
double Schedule::signal_scale(int t) const { return std::sqrt(alpha_bar(t)); }

double Schedule::posterior_variance(int t) const {
  return (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t)) * beta(t);
}

double Schedule::loss_weight(int t) const {
  double var = posterior_variance(t);
  if (t == 1 && steps() >= 2) var = posterior_variance(2);
  if (var <= 0.0) var = beta(t);
  const double b = beta(t);
  return b * b / (2.0 * var * alpha(t) * (1.0 - alpha_bar(t)));
}

std::pair<double, double> Schedule::posterior_mean_coefs(int t) const {
  const double denom = 1.0 - alpha_bar(t);
  return {std::sqrt(alpha_bar(t - 1)) * beta(t) / denom,
          std::sqrt(alpha(t)) * (1.0 - alpha_bar(t - 1)) / denom};
}

Tensor gaussian_forward(const Tensor& x0, int t, const Tensor& eps,
                        const Schedule& s) {
  if (!x0.same_shape(eps))
    throw std::invalid_argument("gaussian_forward: noise shape mismatch");
  const double a = std::sqrt(s.alpha_bar(t)), b = std::sqrt(1.0 - s.alpha_bar(t));
  Tensor out(x0.rows(), x0.cols());
  out.mat() = a * x0.mat() + b * eps.mat();
  return out;
}

Tensor gaussian_step(const Tensor& x_prev, int t, const Tensor& eps,
                     const Schedule& s) {
  Tensor out(x_prev.rows(), x_prev.cols());
  out.mat() = std::sqrt(s.alpha(t)) * x_prev.mat() +
              std::sqrt(s.beta(t)) * eps.mat();
  return out;
}

Var gaussian_loss(const Tensor& eps, const Var& eps_pred, int t,
                  const Schedule& s, bool weighted) {
  if (!eps.same_shape(eps_pred.value()))
    throw std::invalid_argument("gaussian_loss: shape mismatch");
  Var mse = ag::mean(ag::square(ag::sub(eps_pred, ag::constant(eps))));
  return weighted ? ag::scale(mse, s.loss_weight(t)) : mse;
}

Tensor gaussian_posterior_sample(const Tensor& x_t, const Tensor& x0, int t,
                                 const Schedule& s, Rng& rng) {
  const auto [c0, ct] = s.posterior_mean_coefs(t);
  Tensor out(x_t.rows(), x_t.cols());
  out.mat() = c0 * x0.mat() + ct * x_t.mat();
  if (t > 1) {
    const double sd = std::sqrt(s.posterior_variance(t));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += sd * rng.normal();
  }
  return out;
}

Tensor gaussian_reverse_step(const Tensor& x_t, const Tensor& eps_pred, int t,
                             const Schedule& s, Rng& rng) {
  if (!eps_pred.same_shape(x_t))
    throw std::runtime_error("noise predictor returned " +
                             eps_pred.shape_str() + " at step " +
                             std::to_string(t));
  if (!eps_pred.all_finite())
    throw std::runtime_error("noise predictor produced NaN at step " +
                             std::to_string(t));
  const double coef = s.beta(t) / std::sqrt(1.0 - s.alpha_bar(t));
  const double inv = 1.0 / std::sqrt(s.alpha(t));
  const double sd = t > 1 ? std::sqrt(s.posterior_variance(t)) : 0.0;
  Tensor x = x_t;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = (x[i] - coef * eps_pred[i]) * inv;
    if (t > 1) x[i] += sd * rng.normal();
  }
  return x;
}

Tensor sample_reverse_gaussian(const EpsPredictor& predictor, Tensor x,
                               const Schedule& s, Rng& rng) {
  for (int t = s.steps(); t >= 1; --t)
    x = gaussian_reverse_step(x, predictor(x, t), t, s, rng);
  return x;
}

void check_simplex(const Tensor& p, double tol) {
  for (int r = 0; r < p.rows(); ++r) {
    double sum = 0.0;
    for (int c = 0; c < p.cols(); ++c) {
      if (p(r, c) < -tol || !std::isfinite(p(r, c)))
        throw std::invalid_argument("row " + std::to_string(r) +
                                    " has a negative or non-finite entry");
      sum += p(r, c);
    }
    if (std::abs(sum - 1.0) > tol)
      throw std::invalid_argument("row " + std::to_string(r) +
                                  " does not sum to one");
  }
}

Tensor multinomial_forward(const Tensor& y_prev, double beta) {
  check_simplex(y_prev);
  if (beta < 0.0 || beta > 1.0)
    throw std::invalid_argument("resampling probability outside [0, 1]");
  const double k = y_prev.cols();
  Tensor out(y_prev.rows(), y_prev.cols());
  out.mat().array() = (1.0 - beta) * y_prev.mat().array() + beta / k;
  return out;
}

Tensor multinomial_marginal(const Tensor& y0, int t, const Schedule& s) {
  const double abar = s.alpha_bar(t), k = y0.cols();
  Tensor out(y0.rows(), y0.cols());
  out.mat().array() = abar * y0.mat().array() + (1.0 - abar) / k;
  return out;
}

Tensor multinomial_posterior(const Tensor& y_t, const Tensor& y0, int t,
                             const Schedule& s) {
  if (!y_t.same_shape(y0))
    throw std::invalid_argument("multinomial_posterior: shape mismatch");
  const double k = y0.cols(), a = s.alpha(t), abar = s.alpha_bar(t - 1);
  Tensor out(y0.rows(), y0.cols());
  for (int r = 0; r < y0.rows(); ++r) {
    double z = 0.0;
    for (int c = 0; c < y0.cols(); ++c) {
      out(r, c) = (a * y_t(r, c) + (1.0 - a) / k) *
                  (abar * y0(r, c) + (1.0 - abar) / k);
      z += out(r, c);
    }
    if (!(z > 0.0))
      throw std::runtime_error("multinomial_posterior: degenerate row");
    for (int c = 0; c < y0.cols(); ++c) out(r, c) /= z;
  }
  return out;
}

Var multinomial_loss(const Tensor& y0_true, const Var& logits,
                     const Tensor& y_t, int t, const Schedule& s) {
  if (!y0_true.same_shape(logits.value()) || !y0_true.same_shape(y_t))
    throw std::invalid_argument("multinomial_loss: shape mismatch");
  const int rows = y0_true.rows();
  if (t == 1) {
    Tensor w = y0_true;
    w.mat() *= -1.0 / rows;
    return ag::sum(ag::mul(ag::log_softmax_rows(logits), ag::constant(w)));
  }
  const double k = y0_true.cols(), a = s.alpha(t), abar = s.alpha_bar(t - 1);
  const Tensor q = multinomial_posterior(y_t, y0_true, t, s);
  Tensor left(rows, y_t.cols());
  left.mat().array() = a * y_t.mat().array() + (1.0 - a) / k;
  // Unnormalised model posterior and its log-normaliser.
  Var prior = ag::add_scalar(ag::scale(ag::softmax_rows(logits), abar),
                             (1.0 - abar) / k);
  Var theta = ag::mul(prior, ag::constant(left));
  Var log_p = ag::add_col(ag::log(theta),
                          ag::scale(ag::log(ag::sum_cols(theta)), -1.0));
  double entropy_term = 0.0;
  Tensor w = q;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] > 0.0) entropy_term += q[i] * std::log(q[i]);
    w[i] = -q[i] / rows;
  }
  return ag::add_scalar(ag::sum(ag::mul(log_p, ag::constant(w))),
                        entropy_term / rows);
}

Tensor sample_categorical(const Tensor& probs, Rng& rng) {
  Tensor out(probs.rows(), probs.cols());
  for (int r = 0; r < probs.rows(); ++r) {
    const double u = rng.uniform();
    double acc = 0.0;
    int pick = probs.cols() - 1;
    for (int c = 0; c < probs.cols(); ++c) {
      acc += probs(r, c);
      if (u < acc) {
        pick = c;
        break;
      }
    }
    out(r, pick) = 1.0;
  }
  return out;
}

Tensor one_hot(const std::vector<int>& classes, int k) {
  Tensor out(static_cast<int>(classes.size()), k);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] < 0 || classes[i] >= k)
      throw std::invalid_argument("one_hot: class out of range");
    out(static_cast<int>(i), classes[i]) = 1.0;
  }
  return out;
}

}  // namespace cantor::diffusion
