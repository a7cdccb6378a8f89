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

#include "cantor/umln.hpp"

#include <atomic>
#include <stdexcept>

namespace cantor {
namespace {

std::atomic<long> g_perturb_count{0};

}  // namespace

long umln_perturb_count() { return g_perturb_count.load(); }

Var uncertainty(const Var& v) {
  Var centred = ag::add_row(v, ag::scale(ag::mean_rows(v), -1.0));
  return ag::mean_rows(ag::square(centred));
}

Umln::Umln(nn::ParamSet& ps, const std::string& name, int style_dim,
           int channels, Rng& rng, UmlnConfig cfg)
    : gamma_(ps, name + ".gamma", style_dim, channels, rng),
      beta_(ps, name + ".beta", style_dim, channels, rng),
      cfg_(cfg) {
  if (cfg.p < 0.0 || cfg.p > 1.0 || cfg.eps < 0.0)
    throw std::invalid_argument("UMLN needs 0 <= p <= 1 and eps >= 0");
  gamma_.bias().mutable_value().fill(1.0);
}

Umln::ScaleBias Umln::style_scale_bias(const Var& style) const {
  return {gamma_(style), beta_(style)};
}

std::vector<Var> Umln::operator()(const std::vector<Var>& x, const Var& style,
                                  const nn::Context& ctx,
                                  const std::optional<UmlnNoise>& noise) const {
  if (static_cast<int>(x.size()) != style.rows())
    throw std::invalid_argument("UMLN: batch size mismatch");
  if (!ctx.training) return x;
  if (!ctx.rng) throw std::invalid_argument("UMLN: training needs an rng");
  if (ctx.rng->uniform() > cfg_.p) return x;
  ++g_perturb_count;

  const int batch = style.rows();
  auto [gamma, beta] = style_scale_bias(style);
  const int channels = gamma.cols();
  Tensor eg, eb;
  if (noise) {
    eg = noise->eps_gamma;
    eb = noise->eps_beta;
  } else {
    eg = ctx.rng->normal_tensor(batch, channels);
    eb = ctx.rng->normal_tensor(batch, channels);
  }
  Var g_um = ag::add(gamma, ag::mul_row(ag::constant(std::move(eg)),
                                        uncertainty(gamma)));
  Var b_um = ag::add(beta, ag::mul_row(ag::constant(std::move(eb)),
                                       uncertainty(beta)));
  std::vector<Var> out;
  out.reserve(x.size());
  for (int b = 0; b < batch; ++b) {
    if (x[b].cols() != channels)
      throw std::invalid_argument("UMLN: channel mismatch");
    Var xn = ag::normalize_rows(x[b], cfg_.eps);
    out.push_back(ag::add_row(ag::mul_row(xn, ag::slice_rows(g_um, b, 1)),
                              ag::slice_rows(b_um, b, 1)));
  }
  return out;
}

}  // namespace cantor
