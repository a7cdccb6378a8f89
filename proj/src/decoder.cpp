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

#include "cantor/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include "cantor/dsp.hpp"

namespace cantor {
namespace {

// Banded Gaussian smoothing matrix with rows renormalised over the taps that
// fall inside the image.
const Tensor& gaussian_matrix(int n, int window, double sigma) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, double>, Tensor> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(n, window, sigma);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Tensor g(n, n);
  const int half = window / 2;
  for (int i = 0; i < n; ++i) {
    double z = 0.0;
    for (int j = std::max(0, i - half); j <= std::min(n - 1, i + half); ++j) {
      const double d = j - i;
      g(i, j) = std::exp(-d * d / (2.0 * sigma * sigma));
      z += g(i, j);
    }
    for (int j = 0; j < n; ++j) g(i, j) /= z;
  }
  return cache.emplace(key, std::move(g)).first->second;
}

void check_unit_range(const Tensor& t, const char* what) {
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!(t[i] >= -1e-6 && t[i] <= 1.0 + 1e-6))
      throw std::invalid_argument(std::string("ssim: ") + what +
                                  " outside [0, 1]");
}

}  // namespace

Tensor MelRange::normalize(const Tensor& mel) const {
  Tensor x = mel;
  const double span = hi - lo;
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = std::clamp((x[i] - lo) / span, 0.0, 1.0);
  return x;
}

Tensor MelRange::denormalize(const Tensor& x) const {
  Tensor m = x;
  m.mat().array() = m.mat().array() * (hi - lo) + lo;
  return m;
}

MelRange compute_mel_range(const std::vector<SingingSample>& corpus) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : corpus)
    for (std::size_t i = 0; i < s.mel.size(); ++i) {
      lo = std::min(lo, s.mel[i]);
      hi = std::max(hi, s.mel[i]);
    }
  if (!(hi > lo)) return {};
  return {lo, hi};
}

Var ssim(const Var& x, const Var& y, const SsimConfig& cfg) {
  if (!x.value().same_shape(y.value()))
    throw std::invalid_argument("ssim: shape mismatch");
  check_unit_range(x.value(), "first input");
  check_unit_range(y.value(), "second input");
  const Var gr = ag::constant(gaussian_matrix(x.rows(), cfg.window, cfg.sigma));
  const Var gc = ag::constant(gaussian_matrix(x.cols(), cfg.window, cfg.sigma));
  auto blur = [&](const Var& a) { return ag::matmul_nt(ag::matmul(gr, a), gc); };
  Var mx = blur(x), my = blur(y);
  Var mx2 = ag::square(mx), my2 = ag::square(my), mxy = ag::mul(mx, my);
  Var vx = ag::sub(blur(ag::square(x)), mx2);
  Var vy = ag::sub(blur(ag::square(y)), my2);
  Var cxy = ag::sub(blur(ag::mul(x, y)), mxy);
  Var num = ag::mul(ag::add_scalar(ag::scale(mxy, 2.0), cfg.c1),
                    ag::add_scalar(ag::scale(cxy, 2.0), cfg.c2));
  Var den = ag::mul(ag::add_scalar(ag::add(mx2, my2), cfg.c1),
                    ag::add_scalar(ag::add(vx, vy), cfg.c2));
  return ag::mean(ag::div(num, den));
}

Var mae_loss(const Var& pred, const Var& target) {
  if (!pred.value().same_shape(target.value()))
    throw std::invalid_argument("mae_loss: shape mismatch");
  return ag::mean(ag::abs(ag::sub(pred, target)));
}

MelDecoder::MelDecoder(nn::ParamSet& ps, const std::string& name,
                       const DecoderConfig& cfg, Rng& rng)
    : in_(ps, name + ".in", dsp::kMelBins, cfg.residual, rng),
      out_(ps, name + ".out", cfg.residual, dsp::kMelBins, rng),
      step_(ps, name + ".step", cfg.residual, rng),
      net_(ps, name + ".wavenet",
           {.residual = cfg.residual,
            .cond_dim = cfg.cond_dim,
            .layers = cfg.layers,
            .kernel = 3,
            .dilation_cycle = cfg.dilation_cycle},
           rng),
      sched_(diffusion::Schedule::vpsde(cfg.steps, cfg.beta_min, cfg.beta_max)) {}

Var MelDecoder::denoise(const Tensor& x_t, int t, const Var& cond) const {
  if (cond.rows() != x_t.rows())
    throw std::invalid_argument("decoder: condition has " +
                                std::to_string(cond.rows()) +
                                " frames, input " + std::to_string(x_t.rows()));
  if (x_t.cols() != dsp::kMelBins)
    throw std::invalid_argument("decoder: expected 80 mel bins");
  Var step = step_(t);
  Var h = ag::add_row(in_(ag::constant(x_t)), step);
  return ag::sigmoid(out_(net_(h, cond, step)));
}

MelDecoder::Losses MelDecoder::train_step(const Tensor& target, const Var& cond,
                                          Rng& rng,
                                          std::optional<int> t_fixed) const {
  const int t = t_fixed ? *t_fixed : rng.randint(1, sched_.steps());
  const Tensor eps = rng.normal_tensor(target.rows(), target.cols());
  const Tensor x_t = diffusion::gaussian_forward(target, t, eps, sched_);
  Var pred = denoise(x_t, t, cond);
  Var gt = ag::constant(target);
  return {mae_loss(pred, gt), ag::add_scalar(ag::scale(ssim(pred, gt), -1.0), 1.0)};
}

Tensor MelDecoder::infer(const Var& cond, Rng& rng) const {
  ag::NoGradGuard ng;
  Tensor x = rng.normal_tensor(cond.rows(), dsp::kMelBins);
  Tensor x0;
  for (int t = sched_.steps(); t >= 1; --t) {
    x0 = denoise(x, t, cond).value();
    if (!x0.all_finite())
      throw std::runtime_error("decoder produced NaN at step " +
                               std::to_string(t));
    if (t > 1) x = diffusion::gaussian_posterior_sample(x, x0, t, sched_, rng);
  }
  return x0;
}

}  // namespace cantor
