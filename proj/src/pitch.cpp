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

#include "cantor/pitch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cantor/dsp.hpp"

namespace cantor {

PitchStats compute_pitch_stats(const std::vector<SingingSample>& corpus) {
  double sum = 0.0, sq = 0.0;
  long n = 0;
  for (const auto& s : corpus)
    for (std::size_t f = 0; f < s.f0.size(); ++f)
      if (s.uv[f] && s.f0[f] > 0.0) {
        const double v = std::log2(s.f0[f]);
        sum += v;
        sq += v * v;
        ++n;
      }
  if (n == 0) return {};
  PitchStats st;
  st.mean = sum / n;
  st.std = std::sqrt(std::max(sq / n - st.mean * st.mean, 1e-8));
  return st;
}

std::vector<double> note_log2_track(const MusicalScore& score,
                                    const std::vector<int>& durations) {
  if (durations.size() != score.phoneme_to_note.size())
    throw std::invalid_argument("note track: duration count does not match phonemes");
  std::vector<double> per_phoneme(durations.size(), std::nan(""));
  for (std::size_t p = 0; p < durations.size(); ++p) {
    const Note& note = score.notes.at(score.phoneme_to_note[p]);
    if (note.type != NoteType::kRest)
      per_phoneme[p] = std::log2(dsp::midi_to_hz(note.pitch));
  }
  double fill = std::nan("");
  for (double v : per_phoneme)
    if (!std::isnan(v)) {
      fill = v;
      break;
    }
  if (std::isnan(fill)) fill = 0.0;
  std::vector<double> track;
  for (std::size_t p = 0; p < durations.size(); ++p) {
    if (!std::isnan(per_phoneme[p])) fill = per_phoneme[p];
    track.insert(track.end(), std::max(durations[p], 0), fill);
  }
  return track;
}

PitchStats compute_note_relative_stats(const std::vector<SingingSample>& corpus) {
  double sum = 0.0, sq = 0.0;
  long n = 0;
  for (const auto& s : corpus) {
    const auto base = note_log2_track(s.score, s.phoneme_durations);
    for (std::size_t f = 0; f < s.f0.size() && f < base.size(); ++f)
      if (s.uv[f] && s.f0[f] > 0.0) {
        const double v = std::log2(s.f0[f]) - base[f];
        sum += v;
        sq += v * v;
        ++n;
      }
  }
  if (n == 0) return {};
  PitchStats st;
  st.mean = sum / n;
  st.std = std::sqrt(std::max(sq / n - st.mean * st.mean, 1e-8));
  return st;
}

PitchTarget make_pitch_target(const std::vector<double>& f0,
                              const std::vector<int>& uv,
                              const PitchStats& stats,
                              const std::vector<double>* baseline) {
  if (f0.size() != uv.size())
    throw std::invalid_argument("f0 and uv differ in length");
  if (baseline && baseline->size() != f0.size())
    throw std::invalid_argument("pitch baseline length differs from f0");
  const int n = static_cast<int>(f0.size());
  PitchTarget out{Tensor(n, 1), uv};
  std::vector<int> voiced;
  for (int f = 0; f < n; ++f)
    if (uv[f] && f0[f] > 0.0) voiced.push_back(f);
  if (voiced.empty()) return out;
  auto norm = [&](int f) {
    const double base = baseline ? (*baseline)[f] : 0.0;
    return (std::log2(f0[f]) - base - stats.mean) / stats.std;
  };
  std::size_t next = 0;
  for (int f = 0; f < n; ++f) {
    while (next < voiced.size() && voiced[next] < f) ++next;
    if (next < voiced.size() && voiced[next] == f) {
      out.f0(f, 0) = norm(f);
    } else if (next == 0) {
      out.f0(f, 0) = norm(voiced.front());
    } else if (next == voiced.size()) {
      out.f0(f, 0) = norm(voiced.back());
    } else {
      const int a = voiced[next - 1], b = voiced[next];
      const double w = static_cast<double>(f - a) / (b - a);
      out.f0(f, 0) = (1.0 - w) * norm(a) + w * norm(b);
    }
  }
  return out;
}

Tensor pitch_features(const PitchTarget& target) {
  Tensor out(target.f0.rows(), 2);
  for (int f = 0; f < out.rows(); ++f) {
    out(f, 0) = target.f0(f, 0);
    out(f, 1) = target.uv[f];
  }
  return out;
}

PitchContour contour_from_normalized(const Tensor& f0_norm,
                                     const std::vector<int>& uv,
                                     const PitchStats& stats,
                                     const std::vector<double>* baseline) {
  if (baseline && baseline->size() != uv.size())
    throw std::invalid_argument("pitch baseline length differs from uv");
  PitchContour c;
  c.uv = uv;
  c.f0.resize(uv.size(), 0.0);
  for (std::size_t f = 0; f < uv.size(); ++f)
    if (uv[f])
      c.f0[f] = std::exp2(f0_norm(static_cast<int>(f), 0) * stats.std +
                          stats.mean + (baseline ? (*baseline)[f] : 0.0));
  return c;
}

PitchDenoiser::PitchDenoiser(nn::ParamSet& ps, const std::string& name,
                             const PitchConfig& cfg, Rng& rng)
    : x_in_(ps, name + ".x_in", 1, cfg.residual, rng),
      y_in_(ps, name + ".y_in", 2, cfg.residual, rng, false),
      out_(ps, name + ".out", cfg.residual, 3, rng),
      step_(ps, name + ".step", cfg.residual, rng),
      net_(ps, name + ".wavenet",
           {.residual = cfg.residual,
            .cond_dim = cfg.cond_dim,
            .layers = cfg.layers,
            .kernel = 3,
            .dilation_cycle = cfg.dilation_cycle},
           rng) {
  out_.weight().mutable_value().fill(0.0);
  out_.bias().mutable_value().fill(0.0);
}

PitchDenoiser::Output PitchDenoiser::operator()(const Tensor& x_t,
                                                const Tensor& y_t, int t,
                                                const Var& cond) const {
  if (cond.rows() != x_t.rows() || y_t.rows() != x_t.rows())
    throw std::invalid_argument("pitch denoiser: condition has " +
                                std::to_string(cond.rows()) +
                                " frames, target " +
                                std::to_string(x_t.rows()));
  Var step = step_(t);
  Var h = ag::add(x_in_(ag::constant(x_t)), y_in_(ag::constant(y_t)));
  h = ag::add_row(h, step);
  Var o = out_(net_(h, cond, step));
  return {ag::slice_cols(o, 0, 1), ag::slice_cols(o, 1, 2)};
}

PitchDenoiser::Output combine_branches(const PitchDenoiser::Output& a,
                                       const PitchDenoiser::Output& b) {
  if (!a.eps.value().same_shape(b.eps.value()) ||
      !a.logits.value().same_shape(b.logits.value()))
    throw std::invalid_argument("combine_branches: shape mismatch");
  return {ag::scale(ag::add(a.eps, b.eps), 0.5),
          ag::scale(ag::add(a.logits, b.logits), 0.5)};
}

PitchPredictor::PitchPredictor(nn::ParamSet& ps, const std::string& name,
                               const PitchConfig& cfg, Rng& rng)
    : cfg_(cfg),
      specific_(ps, name + ".specific", cfg, rng),
      agnostic_(ps, name + ".agnostic", cfg, rng),
      sched_(diffusion::Schedule::linear(cfg.steps, cfg.beta_1, cfg.beta_max)) {}

PitchDenoiser::Output PitchPredictor::predict(const Tensor& x_t,
                                              const Tensor& y_t, int t,
                                              const Var& specific_cond,
                                              const Var& agnostic_cond) const {
  auto agn = agnostic_(x_t, y_t, t, agnostic_cond);
  if (zero_specific_) {
    Tensor ze(x_t.rows(), 1), zl(x_t.rows(), 2);
    return combine_branches({ag::constant(ze), ag::constant(zl)}, agn);
  }
  return combine_branches(specific_(x_t, y_t, t, specific_cond), agn);
}

PitchPredictor::Losses PitchPredictor::train_step(const PitchTarget& target,
                                                  const Var& specific_cond,
                                                  const Var& agnostic_cond,
                                                  Rng& rng,
                                                  std::optional<int> t_fixed) const {
  const int t = t_fixed ? *t_fixed : rng.randint(1, sched_.steps());
  const int frames = target.f0.rows();
  const Tensor eps = rng.normal_tensor(frames, 1);
  const Tensor x_t = diffusion::gaussian_forward(target.f0, t, eps, sched_);
  const Tensor y0 = diffusion::one_hot(target.uv, 2);
  const Tensor y_t = diffusion::sample_categorical(
      diffusion::multinomial_marginal(y0, t, sched_), rng);
  auto out = predict(x_t, y_t, t, specific_cond, agnostic_cond);
  return {diffusion::gaussian_loss(eps, out.eps, t, sched_, cfg_.weighted_loss),
          diffusion::multinomial_loss(y0, out.logits, y_t, t, sched_)};
}

PitchTarget PitchPredictor::infer(const Var& specific_cond,
                                  const Var& agnostic_cond, Rng& rng) const {
  ag::NoGradGuard ng;
  const int frames = agnostic_cond.rows();
  Tensor x = rng.normal_tensor(frames, 1);
  Tensor uniform(frames, 2, 0.5);
  Tensor y = diffusion::sample_categorical(uniform, rng);
  std::vector<int> uv(frames, 0);
  for (int t = sched_.steps(); t >= 1; --t) {
    auto out = predict(x, y, t, specific_cond, agnostic_cond);
    if (!out.logits.value().all_finite())
      throw std::runtime_error("voicing logits produced NaN at step " +
                               std::to_string(t));
    x = diffusion::gaussian_reverse_step(x, out.eps.value(), t, sched_, rng);
    const Tensor y0 = ag::softmax_rows(out.logits).value();
    if (t > 1) {
      y = diffusion::sample_categorical(
          diffusion::multinomial_posterior(y, y0, t, sched_), rng);
    } else {
      for (int f = 0; f < frames; ++f) uv[f] = y0(f, 1) > y0(f, 0) ? 1 : 0;
    }
  }
  if (!x.all_finite()) throw std::runtime_error("pitch sampler diverged");
  return {x, uv};
}

}  // namespace cantor
