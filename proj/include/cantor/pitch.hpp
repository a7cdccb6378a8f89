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

// Joint Gaussian (log-F0) and multinomial (voicing) diffusion predictor with
// a style-specific and a style-agnostic denoiser.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cantor/corpus.hpp"
#include "cantor/diffusion.hpp"
#include "cantor/nn.hpp"

namespace cantor {

using ag::Var;

struct PitchConfig {
  int cond_dim = 256;
  int residual = 192;
  int layers = 12;
  int dilation_cycle = 4;
  int steps = 100;
  double beta_1 = 1e-4;
  double beta_max = 0.06;
  bool weighted_loss = true;
};

/// Corpus statistics of log2(F0) over voiced frames.
struct PitchStats {
  double mean = 0.0;
  double std = 1.0;
};
PitchStats compute_pitch_stats(const std::vector<SingingSample>& corpus);

struct PitchContour {
  std::vector<double> f0;  // Hz, 0 where unvoiced
  std::vector<int> uv;
};

/// Standardised log2 F0 with unvoiced gaps linearly interpolated (edges held
/// at the nearest voiced value; all-unvoiced gives zeros).
struct PitchTarget {
  Tensor f0;            // T x 1
  std::vector<int> uv;  // T
};
/// With a baseline, the standardised quantity is log2(F0) - baseline[f].
PitchTarget make_pitch_target(const std::vector<double>& f0,
                              const std::vector<int>& uv,
                              const PitchStats& stats,
                              const std::vector<double>* baseline = nullptr);

/// Per-frame log2 frequency of the sounding note under the given phoneme
/// durations. Rest frames hold the previous pitched note (the next one at the
/// start); a score without pitched notes gives zeros.
std::vector<double> note_log2_track(const MusicalScore& score,
                                    const std::vector<int>& durations);

/// Statistics of log2(F0) minus the note track over voiced frames.
PitchStats compute_note_relative_stats(const std::vector<SingingSample>& corpus);
/// [normalised log-F0, uv] per frame, the pitch feature used for
/// conditioning and the reference encoder.
Tensor pitch_features(const PitchTarget& target);
PitchContour contour_from_normalized(const Tensor& f0_norm,
                                     const std::vector<int>& uv,
                                     const PitchStats& stats,
                                     const std::vector<double>* baseline = nullptr);

class PitchDenoiser {
 public:
  struct Output {
    Var eps;     // T x 1
    Var logits;  // T x 2
  };

  PitchDenoiser() = default;
  PitchDenoiser(nn::ParamSet& ps, const std::string& name,
                const PitchConfig& cfg, Rng& rng);
  /// x_t: T x 1, y_t: T x 2 one-hot, cond: T x cond_dim.
  Output operator()(const Tensor& x_t, const Tensor& y_t, int t,
                    const Var& cond) const;
  const nn::WaveNet& wavenet() const { return net_; }

 private:
  nn::Linear x_in_, y_in_, out_;
  nn::StepEmbedding step_;
  nn::WaveNet net_;
};

/// Element-wise mean of the two branches.
PitchDenoiser::Output combine_branches(const PitchDenoiser::Output& a,
                                       const PitchDenoiser::Output& b);

class PitchPredictor {
 public:
  struct Losses {
    Var gdiff, mdiff;
  };

  PitchPredictor() = default;
  PitchPredictor(nn::ParamSet& ps, const std::string& name,
                 const PitchConfig& cfg, Rng& rng);

  /// One noised training example. t is drawn uniformly unless given.
  Losses train_step(const PitchTarget& target, const Var& specific_cond,
                    const Var& agnostic_cond, Rng& rng,
                    std::optional<int> t = {}) const;
  /// Reverse chains for both variables; returns normalised log-F0 and uv.
  PitchTarget infer(const Var& specific_cond, const Var& agnostic_cond,
                    Rng& rng) const;

  PitchDenoiser::Output predict(const Tensor& x_t, const Tensor& y_t, int t,
                                const Var& specific_cond,
                                const Var& agnostic_cond) const;
  const diffusion::Schedule& schedule() const { return sched_; }
  const PitchDenoiser& specific() const { return specific_; }
  const PitchDenoiser& agnostic() const { return agnostic_; }
  /// Replaces the style-specific branch output with zeros (ablation probe).
  void set_zero_specific(bool on) { zero_specific_ = on; }

 private:
  PitchConfig cfg_;
  PitchDenoiser specific_, agnostic_;
  diffusion::Schedule sched_;
  bool zero_specific_ = false;
};

}  // namespace cantor
