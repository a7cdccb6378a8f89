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

#include "cantor/pitch.hpp"
#include "grad_check.hpp"

namespace cantor {
namespace {

PitchConfig tiny() {
  PitchConfig c;
  c.cond_dim = 6;
  c.residual = 8;
  c.layers = 4;
  c.dilation_cycle = 2;
  c.steps = 10;
  c.beta_max = 0.3;
  return c;
}

TEST(PitchTarget, InterpolatesGapsAndHoldsEdges) {
  PitchStats st{std::log2(200.0), 0.5};
  std::vector<double> f0 = {0, 200, 0, 0, 400, 0};
  std::vector<int> uv = {0, 1, 0, 0, 1, 0};
  PitchTarget t = make_pitch_target(f0, uv, st);
  const double hi = 1.0 / 0.5;  // one octave above the mean
  const double want[6] = {0, 0, hi / 3, 2 * hi / 3, hi, hi};
  for (int f = 0; f < 6; ++f) EXPECT_NEAR(t.f0(f, 0), want[f], 1e-12) << f;
  PitchContour c = contour_from_normalized(t.f0, uv, st);
  EXPECT_NEAR(c.f0[1], 200.0, 1e-9);
  EXPECT_NEAR(c.f0[4], 400.0, 1e-9);
  EXPECT_EQ(c.f0[2], 0.0);
  EXPECT_THROW(make_pitch_target({1.0}, {1, 0}, st), std::invalid_argument);
  PitchTarget silent = make_pitch_target({0, 0}, {0, 0}, st);
  EXPECT_EQ(silent.f0(1, 0), 0.0);
}

TEST(PitchTarget, FeaturesCarryVoicing) {
  PitchTarget t{Tensor::of({{0.5}, {-1.0}}), {1, 0}};
  Tensor f = pitch_features(t);
  EXPECT_EQ(f(0, 0), 0.5);
  EXPECT_EQ(f(0, 1), 1.0);
  EXPECT_EQ(f(1, 1), 0.0);
}

TEST(PitchDenoiser, ZeroInitialisedHeadAndShapes) {
  Rng rng(1);
  nn::ParamSet ps;
  PitchDenoiser d(ps, "pd", tiny(), rng);
  auto out = d(rng.normal_tensor(12, 1), diffusion::one_hot(std::vector<int>(12, 1), 2),
               5, ag::constant(rng.normal_tensor(12, 6)));
  ASSERT_EQ(out.eps.rows(), 12);
  ASSERT_EQ(out.eps.cols(), 1);
  ASSERT_EQ(out.logits.cols(), 2);
  EXPECT_EQ(out.eps.value().max_abs(), 0.0);
  EXPECT_EQ(out.logits.value().max_abs(), 0.0);
  EXPECT_THROW(d(Tensor(12, 1), Tensor(12, 2), 1, ag::constant(Tensor(11, 6))),
               std::invalid_argument);
}

TEST(PitchDenoiser, ConditioningHasFiniteReceptiveField) {
  Rng rng(2);
  nn::ParamSet ps;
  PitchDenoiser d(ps, "pd", tiny(), rng);
  for (auto& e : ps.entries())
    if (e.first.find(".out") != std::string::npos)
      e.second.mutable_value() = rng.normal_tensor(e.second.rows(), e.second.cols());
  const int n = 64, j = 30;
  Tensor x = rng.normal_tensor(n, 1), y = diffusion::one_hot(std::vector<int>(n, 0), 2);
  Tensor c = rng.normal_tensor(n, 6);
  Tensor base = d(x, y, 3, ag::constant(c)).eps.value();
  c(j, 2) += 1.0;
  Tensor moved = d(x, y, 3, ag::constant(c)).eps.value();
  const int radius = d.wavenet().conditioning_radius();
  for (int f = 0; f < n; ++f) {
    const bool inside = std::abs(f - j) <= radius;
    if (!inside) EXPECT_EQ(moved(f, 0), base(f, 0)) << f;
  }
  EXPECT_NE(moved(j, 0), base(j, 0));
}

TEST(PitchPredictor, BranchesAreAveraged) {
  PitchDenoiser::Output a{ag::constant(Tensor::of({{1.0}})),
                          ag::constant(Tensor::of({{2.0, 4.0}}))};
  PitchDenoiser::Output b{ag::constant(Tensor::of({{3.0}})),
                          ag::constant(Tensor::of({{0.0, -4.0}}))};
  auto c = combine_branches(a, b);
  EXPECT_EQ(c.eps.item(), 2.0);
  EXPECT_EQ(c.logits.value()(0, 0), 1.0);
  EXPECT_EQ(c.logits.value()(0, 1), 0.0);
}

TEST(PitchPredictor, TrainStepLossesAndGradients) {
  Rng rng(3);
  nn::ParamSet ps;
  PitchPredictor p(ps, "pitch", tiny(), rng);
  PitchTarget target = make_pitch_target({0, 210, 220, 230, 0, 0, 190, 200},
                                         {0, 1, 1, 1, 0, 0, 1, 1},
                                         {std::log2(200.0), 0.3});
  Var spec = ag::parameter(rng.normal_tensor(8, 6));
  Var agn = ag::parameter(rng.normal_tensor(8, 6));
  for (int t : {1, 5, 10}) {
    Rng r1(11), r2(11);
    auto a = p.train_step(target, spec, agn, r1, t);
    auto b = p.train_step(target, spec, agn, r2, t);
    EXPECT_EQ(a.gdiff.item(), b.gdiff.item());
    EXPECT_TRUE(std::isfinite(a.mdiff.item()));
  }
  // Zero-initialised heads still see a positive noise loss.
  Rng r3(12);
  auto l = p.train_step(target, spec, agn, r3, 4);
  EXPECT_GT(l.gdiff.item(), 0.0);
  std::vector<Var> leaves = {spec, agn};
  for (auto& e : ps.entries()) leaves.push_back(e.second);
  for (auto& e : ps.entries())
    if (e.first.find(".out") != std::string::npos)
      e.second.mutable_value() =
          rng.normal_tensor(e.second.rows(), e.second.cols(), 0.3);
  auto res = testing::check_gradients(
      [&] {
        Rng r(13);
        auto o = p.train_step(target, spec, agn, r, 4);
        return ag::add(o.gdiff, o.mdiff);
      },
      leaves, 1e-6, 1e-4);
  EXPECT_LT(res.max_rel_error, 1e-4) << "abs " << res.max_abs_error;
}

TEST(PitchPredictor, InferenceIsSeedDeterministic) {
  Rng rng(4);
  nn::ParamSet ps;
  PitchPredictor p(ps, "pitch", tiny(), rng);
  Var spec = ag::constant(rng.normal_tensor(10, 6));
  Var agn = ag::constant(rng.normal_tensor(10, 6));
  Rng a(5), b(5);
  PitchTarget x = p.infer(spec, agn, a), y = p.infer(spec, agn, b);
  EXPECT_EQ(x.f0, y.f0);
  EXPECT_EQ(x.uv, y.uv);
  ASSERT_EQ(x.f0.rows(), 10);
  EXPECT_TRUE(x.f0.all_finite());
}

TEST(PitchPredictor, ZeroSpecificBranchOnlyUsesAgnosticHalf) {
  Rng rng(6);
  nn::ParamSet ps;
  PitchPredictor p(ps, "pitch", tiny(), rng);
  for (auto& e : ps.entries())
    if (e.first.find(".out") != std::string::npos)
      e.second.mutable_value() = rng.normal_tensor(e.second.rows(), e.second.cols());
  Tensor x = rng.normal_tensor(6, 1), y = diffusion::one_hot({0, 1, 1, 0, 1, 0}, 2);
  Var spec = ag::constant(rng.normal_tensor(6, 6));
  Var agn = ag::constant(rng.normal_tensor(6, 6));
  p.set_zero_specific(true);
  Tensor z = p.predict(x, y, 2, spec, agn).eps.value();
  Tensor half = p.agnostic()(x, y, 2, agn).eps.value();
  for (int f = 0; f < 6; ++f) EXPECT_NEAR(z(f, 0), 0.5 * half(f, 0), 1e-14);
}

TEST(NoteTrack, FollowsDurationsAndHoldsAcrossRests) {
  MusicalScore score;
  score.notes = {{.pitch = 60, .type = NoteType::kRest, .duration = 0.1},
                 {.pitch = 69, .type = NoteType::kNormal, .duration = 0.2},
                 {.pitch = 60, .type = NoteType::kRest, .duration = 0.1},
                 {.pitch = 81, .type = NoteType::kNormal, .duration = 0.2}};
  score.phonemes = {"SP", "l", "a", "SP", "a"};
  score.phoneme_to_note = {0, 1, 1, 2, 3};
  const auto track = note_log2_track(score, {2, 1, 2, 1, 3});
  ASSERT_EQ(track.size(), 9u);
  const double a4 = std::log2(440.0), a5 = std::log2(880.0);
  const std::vector<double> want{a4, a4, a4, a4, a4, a4, a5, a5, a5};
  for (std::size_t f = 0; f < want.size(); ++f) EXPECT_NEAR(track[f], want[f], 1e-12) << f;
  EXPECT_THROW(note_log2_track(score, {1, 1}), std::invalid_argument);
}

TEST(PitchTarget, BaselineRoundTrip) {
  const std::vector<double> f0{0, 220, 233, 0, 450, 440};
  const std::vector<int> uv{0, 1, 1, 0, 1, 1};
  const std::vector<double> base{7.7, 7.78, 7.78, 7.78, 8.78, 8.78};
  const PitchStats st{0.01, 0.05};
  const PitchTarget t = make_pitch_target(f0, uv, st, &base);
  EXPECT_NEAR(t.f0(1, 0), (std::log2(220.0) - 7.78 - 0.01) / 0.05, 1e-12);
  const PitchContour c = contour_from_normalized(t.f0, uv, st, &base);
  for (std::size_t f = 0; f < f0.size(); ++f) EXPECT_NEAR(c.f0[f], f0[f], 1e-9) << f;
  const std::vector<double> short_base{1.0};
  EXPECT_THROW(make_pitch_target(f0, uv, st, &short_base), std::invalid_argument);
  EXPECT_THROW(contour_from_normalized(t.f0, uv, st, &short_base), std::invalid_argument);
}

}  // namespace
}  // namespace cantor
