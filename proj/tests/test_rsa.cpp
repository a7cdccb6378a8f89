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

#include <cmath>

#include "cantor/rsa.hpp"
#include "grad_check.hpp"

namespace cantor {
namespace {

RqCodebooks books_1d(const std::vector<std::vector<double>>& values) {
  Rng rng(0);
  RqCodebooks b(static_cast<int>(values.size()),
                static_cast<int>(values[0].size()), 1, rng);
  for (std::size_t n = 0; n < values.size(); ++n)
    for (std::size_t k = 0; k < values[n].size(); ++k)
      b.codes[n](static_cast<int>(k), 0) = values[n][k];
  for (auto& f : b.initialized) f = 1;
  return b;
}

TEST(Rq, OneDimensionalHandCase) {
  RqCodebooks b = books_1d({{1.0, -1.0}, {-0.5, 0.5}});
  Tensor e = Tensor::of({{0.6}, {-1.7}});
  RqResult r = rq_quantize(e, b);
  EXPECT_EQ(r.codes[0], (std::vector<int>{0, 1}));
  EXPECT_EQ(r.codes[1], (std::vector<int>{0, 0}));
  EXPECT_NEAR(r.partial[1](0, 0), 0.5, 1e-15);
  EXPECT_NEAR(r.partial[1](1, 0), -1.5, 1e-15);
  EXPECT_NEAR(r.residual[1](0, 0), 0.1, 1e-15);
  // (0.6-1)^2 + (0.6-0.5)^2 + (-1.7+1)^2 + (-1.7+1.5)^2
  EXPECT_NEAR(commitment_loss(ag::constant(e), r).item(),
              0.16 + 0.01 + 0.49 + 0.04, 1e-12);
}

TEST(Rq, FourDepthToyWithZeroBooks) {
  RqCodebooks b = books_1d({{-1.0, 1.0}, {-0.5, 0.5}, {0.0, 0.0}, {0.0, 0.0}});
  Var e = ag::parameter(Tensor::of({{0.7}}));
  RqResult r = rq_quantize(e.value(), b);
  EXPECT_EQ(b.codes[0](r.codes[0][0], 0), 1.0);
  EXPECT_EQ(b.codes[1](r.codes[1][0], 0), -0.5);
  EXPECT_NEAR(r.partial[1](0, 0), 0.5, 1e-15);
  EXPECT_NEAR(r.residual[0](0, 0), -0.3, 1e-15);
  EXPECT_NEAR(r.residual[1](0, 0), 0.2, 1e-15);
  Var lc = commitment_loss(e, r);
  EXPECT_NEAR(lc.item(), 0.21, 1e-15);
  // Gradient is sum_n 2 (E - E-hat^n).
  ag::backward(lc);
  EXPECT_NEAR(e.grad()(0, 0), 2 * (-0.3 + 0.2 + 0.2 + 0.2), 1e-14);
}

TEST(Rq, ExactRepresentationLeavesZeroResidual) {
  Rng rng(11);
  RqCodebooks b(4, 5, 3, rng);
  for (int n = 1; n < 4; ++n)
    for (int c = 0; c < 3; ++c) b.codes[n](2, c) = 0.0;
  Tensor e(1, 3);
  for (int c = 0; c < 3; ++c) e(0, c) = b.codes[0](4, c);
  RqResult r = rq_quantize(e, b);
  EXPECT_EQ(r.codes[0][0], 4);
  for (int n = 1; n < 4; ++n) EXPECT_EQ(r.codes[n][0], 2);
  EXPECT_EQ(r.partial[3], e);
  EXPECT_EQ(commitment_loss(ag::constant(e), r).item(), 0.0);
}

TEST(Rq, TiesGoToLowestIndex) {
  RqCodebooks b = books_1d({{1.0, -1.0, 1.0}});
  RqResult r = rq_quantize(Tensor::of({{0.0}}), b);
  EXPECT_EQ(r.codes[0][0], 0);
}

TEST(Rq, MatchesBruteForceGreedySearch) {
  Rng rng(1);
  RqCodebooks b(3, 6, 4, rng);
  for (auto& c : b.codes) c = rng.normal_tensor(6, 4);
  Tensor e = rng.normal_tensor(20, 4, 2.0);
  RqResult r = rq_quantize(e, b);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> res(e.row(t).begin(), e.row(t).end());
    for (int n = 0; n < 3; ++n) {
      int best = -1;
      double best_d = 1e300;
      for (int k = 0; k < 6; ++k) {
        double d = 0.0;
        for (int c = 0; c < 4; ++c)
          d += std::pow(res[c] - b.codes[n](k, c), 2);
        if (d < best_d) best_d = d, best = k;
      }
      EXPECT_EQ(r.codes[n][t], best);
      for (int c = 0; c < 4; ++c) res[c] -= b.codes[n](best, c);
      for (int c = 0; c < 4; ++c)
        EXPECT_NEAR(r.residual[n](t, c), res[c], 1e-12);
    }
  }
}

TEST(Rq, ResidualNormNeverGrowsWithZeroCodeAvailable) {
  Rng rng(2);
  RqCodebooks b(4, 8, 3, rng);
  for (auto& c : b.codes) {
    c = rng.normal_tensor(8, 3);
    for (int d = 0; d < 3; ++d) c(0, d) = 0.0;
  }
  Tensor e = rng.normal_tensor(30, 3);
  RqResult r = rq_quantize(e, b);
  for (int t = 0; t < 30; ++t) {
    double prev = 0.0;
    for (int c = 0; c < 3; ++c) prev += e(t, c) * e(t, c);
    for (int n = 0; n < 4; ++n) {
      double cur = 0.0;
      for (int c = 0; c < 3; ++c) cur += std::pow(r.residual[n](t, c), 2);
      EXPECT_LE(cur, prev + 1e-12);
      prev = cur;
    }
  }
}

TEST(Rq, RejectsWidthMismatch) {
  Rng rng(3);
  RqCodebooks b(2, 4, 3, rng);
  EXPECT_THROW(rq_quantize(Tensor(2, 4), b), std::invalid_argument);
}

TEST(Rq, StraightThroughHasQuantisedValueAndIdentityGradient) {
  RqCodebooks b = books_1d({{1.0, -1.0}, {-0.5, 0.5}});
  Var e = ag::parameter(Tensor::of({{0.6}, {-1.7}}));
  RqResult r = rq_quantize(e.value(), b);
  Var q = straight_through(e, r);
  EXPECT_NEAR(q.value()(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(q.value()(1, 0), -1.5, 1e-15);
  ag::backward(ag::sum(ag::scale(q, 3.0)));
  EXPECT_EQ(e.grad()(0, 0), 3.0);
  EXPECT_EQ(e.grad()(1, 0), 3.0);
}

TEST(Rq, CommitmentGradientMatchesFiniteDifferences) {
  Rng rng(4);
  RqCodebooks b(2, 5, 3, rng);
  Var e = ag::parameter(rng.normal_tensor(4, 3));
  const RqResult r = rq_quantize(e.value(), b);
  auto res = testing::check_gradients([&] { return commitment_loss(e, r); }, {e});
  EXPECT_LT(res.max_rel_error, 1e-6);
}

TEST(Rq, EmaWithZeroDecayMovesAssignedCodesToClusterMean) {
  RqCodebooks b = books_1d({{0.0, 10.0, 100.0}});
  Tensor e = Tensor::of({{1.0}, {2.0}, {9.0}, {12.0}});
  Rng rng(5);
  std::vector<Tensor> batch = {e};
  std::vector<RqResult> res = {rq_quantize(e, b)};
  codebook_update(b, batch, res, 0.0, 100, rng);
  EXPECT_NEAR(b.codes[0](0, 0), 1.5, 1e-12);
  EXPECT_NEAR(b.codes[0](1, 0), 10.5, 1e-12);
  EXPECT_EQ(b.codes[0](2, 0), 100.0);  // unassigned, untouched
}

TEST(Rq, EmaConvergesToFixedPoint) {
  RqCodebooks b = books_1d({{0.0, 10.0}});
  Tensor e = Tensor::of({{1.0}, {2.0}, {3.0}, {11.0}, {13.0}});
  Rng rng(6);
  for (int i = 0; i < 500; ++i) {
    std::vector<RqResult> res = {rq_quantize(e, b)};
    codebook_update(b, {e}, res, 0.9, 1000, rng);
  }
  EXPECT_NEAR(b.codes[0](0, 0), 2.0, 1e-9);
  EXPECT_NEAR(b.codes[0](1, 0), 12.0, 1e-9);
}

TEST(Rq, EmaRepeatedResidualConverges) {
  RqCodebooks b = books_1d({{0.0, 50.0}});
  Tensor e = Tensor::of({{3.25}});
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    std::vector<RqResult> res = {rq_quantize(e, b)};
    codebook_update(b, {e}, res, 0.99, 1000, rng);
  }
  EXPECT_LT(std::abs(b.codes[0](0, 0) - 3.25), 1e-3);
  EXPECT_EQ(b.codes[0](1, 0), 50.0);
}

TEST(Rq, EmptyBatchLeavesBooksUnchanged) {
  Rng rng(13);
  RqCodebooks b(2, 3, 2, rng);
  const auto before = b.codes;
  codebook_update(b, {Tensor(0, 2)}, {rq_quantize(Tensor(0, 2), b)}, 0.99, 100,
                  rng);
  EXPECT_EQ(b.codes, before);
}

TEST(Rq, StaleCodeIsReseededFromBatch) {
  RqCodebooks b = books_1d({{0.0, 1000.0}});
  Tensor e = Tensor::of({{1.0}, {-1.0}});
  Rng rng(7);
  for (int i = 0; i < 3; ++i) {
    std::vector<RqResult> res = {rq_quantize(e, b)};
    codebook_update(b, {e}, res, 0.5, 3, rng);
  }
  const double c = b.codes[0](1, 0);
  EXPECT_TRUE(c == 1.0 || c == -1.0) << c;
}

TEST(Rq, FirstUpdateSeedsFromData) {
  Rng rng(8);
  RqCodebooks b(1, 4, 2, rng);
  Tensor e = Tensor::of({{5, 5}, {6, 6}});
  std::vector<RqResult> res = {rq_quantize(e, b)};
  codebook_update(b, {e}, res, 0.99, 100, rng);
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(b.codes[0](k, 0), b.codes[0](k, 1), 1e-2);
    EXPECT_GT(b.codes[0](k, 0), 4.9);
    EXPECT_LT(b.codes[0](k, 0), 6.1);
  }
}

TEST(Rq, UsageEntropy) {
  RqResult a, c;
  a.codes = {{0, 1, 2, 3}};
  c.codes = {{0, 0, 0, 0}};
  EXPECT_NEAR(code_usage_entropy({a}, 0, 4), std::log(4.0), 1e-12);
  EXPECT_NEAR(code_usage_entropy({c}, 0, 4), 0.0, 1e-12);
}

TEST(Rsa, SingleHeadAttentionHandCase) {
  Var q = ag::constant(Tensor::of({{1.0, 0.0}}));
  Var k = ag::constant(Tensor::of({{1.0, 0.0}, {0.0, 1.0}}));
  Var v = ag::constant(Tensor::of({{2.0}, {3.0}}));
  auto a = align_attention(q, k, v);
  const double w0 = std::exp(1.0 / std::sqrt(2.0));
  const double want = (2.0 * w0 + 3.0) / (w0 + 1.0);
  EXPECT_NEAR(a.output.item(), want, 1e-12);
  EXPECT_NEAR(a.weights.value()(0, 0) + a.weights.value()(0, 1), 1.0, 1e-12);
  EXPECT_THROW(align_attention(q, ag::constant(Tensor(0, 2)),
                               ag::constant(Tensor(0, 1))),
               std::invalid_argument);
}

TEST(Rsa, OneDimensionalAttentionHandCase) {
  auto a = align_attention(ag::constant(Tensor::of({{1.0}})),
                           ag::constant(Tensor::of({{0.0}, {std::log(4.0)}})),
                           ag::constant(Tensor::of({{1.0}, {3.0}})));
  EXPECT_NEAR(a.weights.value()(0, 0), 0.2, 1e-15);
  EXPECT_NEAR(a.output.item(), 2.6, 1e-14);
}

TEST(Rsa, SingleReferenceRowIsCopied) {
  Rng rng(14);
  Var v = ag::constant(rng.normal_tensor(1, 3));
  auto a = align_attention(ag::constant(rng.normal_tensor(5, 3)),
                           ag::constant(rng.normal_tensor(1, 3)), v);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 3; ++c)
      EXPECT_NEAR(a.output.value()(r, c), v.value()(0, c), 1e-15);
}

TEST(Rsa, ReferenceEncoderDownsamplesByFour) {
  Rng rng(9);
  nn::ParamSet ps;
  RsaConfig cfg;
  cfg.hidden = 8;
  cfg.f0_embed = 4;
  cfg.conv_layers = 3;
  ConvStyleEncoder enc(ps, "ref", 80, cfg, rng);
  for (int t : {8, 9, 37, 100, 101}) {
    Var out = enc(ag::constant(Tensor(t, 80)), ag::constant(Tensor(t, 2)));
    EXPECT_EQ(out.rows(), (t + 3) / 4) << t;
    EXPECT_EQ(out.cols(), 8);
  }
  EXPECT_THROW(enc(ag::constant(Tensor(8, 80)), ag::constant(Tensor(7, 2))),
               std::invalid_argument);
}

TEST(Rsa, AlignAttentionShapesAndGradients) {
  Rng rng(10);
  nn::ParamSet ps;
  AlignAttention attn(ps, "align", 4, 2, 2, 4, rng);
  Var content = ag::parameter(rng.normal_tensor(9, 4));
  Var detail = ag::parameter(rng.normal_tensor(3, 4));
  EXPECT_EQ(attn(content, detail).rows(), 9);
  EXPECT_THROW(attn(content, ag::constant(Tensor(0, 4))), std::invalid_argument);
  std::vector<Var> leaves = {content, detail};
  for (auto& e : ps.entries()) leaves.push_back(e.second);
  auto res = testing::check_gradients(
      [&] { return ag::sum(ag::square(attn(content, detail))); }, leaves, 1e-6,
      1e-4);
  EXPECT_LT(res.max_rel_error, 1e-4);
}

TEST(Rsa, StyleSpecificRepresentationBroadcastsStyle) {
  Var c = ag::constant(Tensor(2, 3, 1.0)), a = ag::constant(Tensor(2, 3, 2.0));
  Var t = ag::constant(Tensor::of({{0.1, 0.2, 0.3}}));
  Var e = ag::constant(Tensor::of({{1.0, 1.0, 1.0}}));
  Tensor out = style_specific_rep(c, a, t, e).value();
  EXPECT_NEAR(out(1, 2), 4.3, 1e-12);
  EXPECT_THROW(style_specific_rep(c, ag::constant(Tensor(3, 3)), t, e),
               std::invalid_argument);
}

}  // namespace
}  // namespace cantor
