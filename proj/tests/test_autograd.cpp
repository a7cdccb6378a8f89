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

#include <gtest/gtest.h>

#include "cantor/autograd.hpp"
#include "cantor/nn.hpp"
#include "grad_check.hpp"

namespace cantor {
namespace {

using ag::Var;

Var leaf(Rng& rng, int r, int c, double offset = 0.0) {
  Tensor t = rng.normal_tensor(r, c);
  t.mat().array() += offset;
  return ag::parameter(std::move(t));
}

TEST(Autograd, ElementwiseAndBroadcastOps) {
  Rng rng(1);
  Var a = leaf(rng, 3, 4), b = leaf(rng, 3, 4, 3.0);
  Var row = leaf(rng, 1, 4), col = leaf(rng, 3, 1, 2.0), s = leaf(rng, 1, 1);
  auto f = [&] {
    Var x = ag::add(ag::mul(a, b), ag::div(a, b));
    x = ag::sub(x, ag::mul_row(ag::add_row(a, row), row));
    x = ag::add(x, ag::div_col(ag::mul_col(ag::add_col(b, col), col), col));
    x = ag::mul_scalar_var(ag::add_scalar_var(x, s), s);
    x = ag::add(ag::tanh(x), ag::sigmoid(ag::scale(x, 0.5)));
    x = ag::add(x, ag::sqrt(ag::add_scalar(ag::square(b), 1.0)));
    x = ag::add(x, ag::log(ag::exp(ag::scale(a, 0.1))));
    return ag::sum(ag::square(x));
  };
  auto res = testing::check_gradients(f, {a, b, row, col, s});
  EXPECT_LT(res.max_rel_error, 1e-5);
}

TEST(Autograd, MatmulReductionsAndSoftmax) {
  Rng rng(2);
  Var a = leaf(rng, 3, 5), b = leaf(rng, 5, 2), c = leaf(rng, 4, 5);
  auto f = [&] {
    Var x = ag::matmul(a, b);                     // 3x2
    Var y = ag::matmul_nt(a, c);                  // 3x4
    Var z = ag::softmax_rows(y);
    Var w = ag::log_softmax_rows(ag::transpose(y));  // 4x3
    Var t = ag::add(ag::sum(ag::mul(z, z)), ag::mean(w));
    t = ag::add(t, ag::sum(ag::square(ag::sum_rows(x))));
    t = ag::add(t, ag::sum(ag::square(ag::mean_rows(x))));
    t = ag::add(t, ag::sum(ag::square(ag::sum_cols(y))));
    return t;
  };
  auto res = testing::check_gradients(f, {a, b, c});
  EXPECT_LT(res.max_rel_error, 1e-5);
}

TEST(Autograd, NormalizeRowsGradient) {
  Rng rng(3);
  Var a = leaf(rng, 4, 6);
  Var target = ag::constant(rng.normal_tensor(4, 6));
  auto f = [&] {
    return ag::sum(ag::mul(ag::normalize_rows(a, 1e-5), target));
  };
  EXPECT_LT(testing::check_gradients(f, {a}).max_rel_error, 1e-5);
}

TEST(Autograd, StructuralOps) {
  Rng rng(4);
  Var a = leaf(rng, 4, 3), b = leaf(rng, 4, 2), c = leaf(rng, 2, 3);
  const std::vector<int> idx{0, 0, 3, 1, 3};
  auto f = [&] {
    std::vector<Var> cc{a, b};
    Var x = ag::concat_cols(cc);  // 4x5
    std::vector<Var> rr{a, c};
    Var y = ag::concat_rows(rr);  // 6x3
    Var g = ag::gather_rows(y, idx);
    Var t = ag::sum(ag::square(ag::slice_cols(x, 1, 3)));
    t = ag::add(t, ag::sum(ag::square(ag::slice_rows(y, 2, 3))));
    return ag::add(t, ag::sum(ag::mul(g, g)));
  };
  EXPECT_LT(testing::check_gradients(f, {a, b, c}).max_rel_error, 1e-5);
}

TEST(Autograd, ConvolutionWithDilationAndStride) {
  Rng rng(5);
  Var x = leaf(rng, 9, 3);
  for (int stride : {1, 2}) {
    for (int dilation : {1, 2}) {
      Var w = leaf(rng, 3 * 3, 4);
      auto f = [&] {
        return ag::sum(ag::square(ag::conv1d(x, w, 3, dilation, stride)));
      };
      EXPECT_LT(testing::check_gradients(f, {x, w}).max_rel_error, 1e-5)
          << "stride " << stride << " dilation " << dilation;
    }
  }
}

TEST(Autograd, ConvolutionMatchesDirectSum) {
  Rng rng(6);
  Tensor x = rng.normal_tensor(7, 2);
  Tensor w = rng.normal_tensor(3 * 2, 1);
  Var y = ag::conv1d(ag::constant(x), ag::constant(w), 3, 2, 1);
  for (int t = 0; t < 7; ++t) {
    double expect = 0.0;
    for (int k = 0; k < 3; ++k) {
      const int src = t + (k - 1) * 2;
      if (src < 0 || src >= 7) continue;
      for (int c = 0; c < 2; ++c) expect += x(src, c) * w(k * 2 + c, 0);
    }
    EXPECT_NEAR(y.value()(t, 0), expect, 1e-12);
  }
  // Stride 2 keeps ceil(T / 2) frames.
  EXPECT_EQ(ag::conv1d(ag::constant(x), ag::constant(w), 3, 1, 2).rows(), 4);
}

TEST(Autograd, DetachBlocksGradient) {
  Rng rng(7);
  Var a = leaf(rng, 2, 2);
  Var y = ag::sum(ag::mul(ag::detach(a), a));
  ag::backward(y);
  // d/da sum(sg(a) * a) = sg(a)
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_DOUBLE_EQ(a.grad()[i], a.value()[i]);
}

TEST(Autograd, NoGradGuardSkipsGraph) {
  Rng rng(8);
  Var a = leaf(rng, 2, 2);
  ag::NoGradGuard ng;
  Var y = ag::sum(ag::square(a));
  EXPECT_FALSE(y.requires_grad());
}

TEST(Autograd, SharedSubexpressionAccumulates) {
  Var a = ag::parameter(Tensor::scalar(3.0));
  Var b = ag::mul(a, a);
  Var y = ag::add(b, b);  // 2 a^2
  ag::backward(y);
  EXPECT_DOUBLE_EQ(a.grad()[0], 12.0);
}

TEST(Nn, WaveNetGradient) {
  Rng rng(9);
  nn::ParamSet ps;
  nn::WaveNetConfig cfg{.residual = 4, .cond_dim = 3, .layers = 3, .kernel = 3,
                        .dilation_cycle = 2};
  nn::WaveNet net(ps, "wn", cfg, rng);
  Var h = leaf(rng, 6, 4), cond = leaf(rng, 6, 3), step = leaf(rng, 1, 4);
  auto f = [&] { return ag::sum(ag::square(net(h, cond, step))); };
  std::vector<Var> leaves{h, cond, step};
  for (const auto& [n, v] : ps.entries()) leaves.push_back(v);
  EXPECT_LT(testing::check_gradients(f, leaves).max_rel_error, 1e-5);
}

TEST(Nn, AdamMovesAgainstGradient) {
  nn::ParamSet ps;
  Var p = ps.add("p", Tensor::of({{1.0, -1.0}}));
  nn::Adam opt(ps, {.lr = 0.1, .warmup_steps = 0, .clip_norm = 0.0});
  for (int i = 0; i < 200; ++i) {
    ps.zero_grad();
    ag::backward(ag::sum(ag::square(p)));
    opt.step();
  }
  EXPECT_LT(p.value().max_abs(), 1e-2);
}

}  // namespace
}  // namespace cantor
