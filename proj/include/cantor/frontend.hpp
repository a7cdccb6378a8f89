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

// Lyric and note encoders, duration predictor and length regulator.

#pragma once

#include <string>
#include <vector>

#include "cantor/corpus.hpp"
#include "cantor/nn.hpp"

namespace cantor {

using ag::Var;

struct EncoderConfig {
  int hidden = 256;
  int layers = 4;
  int kernel = 9;
  int filter = 1024;
  int heads = 2;
  double dropout = 0.1;
};

/// Ids for a phoneme list. Throws std::invalid_argument naming the symbol.
std::vector<int> phoneme_ids(const std::vector<std::string>& phonemes);

class PhonemeEncoder {
 public:
  PhonemeEncoder() = default;
  PhonemeEncoder(nn::ParamSet& ps, const std::string& name,
                 const EncoderConfig& cfg, Rng& rng);
  /// ids may carry trailing padding (id 0); only the prefix before the first
  /// pad attends or is attended to, and padded rows come out as zeros.
  Var operator()(const std::vector<int>& ids, const nn::Context& ctx) const;
  Var encode(const std::vector<std::string>& phonemes,
             const nn::Context& ctx) const;

 private:
  nn::Embedding embed_;
  std::vector<nn::FFTBlock> blocks_;
  int hidden_ = 0;
};

class NoteEncoder {
 public:
  NoteEncoder() = default;
  NoteEncoder(nn::ParamSet& ps, const std::string& name, int hidden, Rng& rng);
  /// One row per phoneme: pitch embedding + type embedding + W * duration.
  /// Throws std::invalid_argument on pitches outside [0, 127].
  Var operator()(const MusicalScore& score) const;
  const nn::Linear& duration_projection() const { return duration_; }

 private:
  nn::Embedding pitch_, type_;
  nn::Linear duration_;
};

/// Element-wise sum; throws std::invalid_argument on shape mismatch.
Var compose_content(const Var& phoneme_features, const Var& note_features);

class DurationPredictor {
 public:
  DurationPredictor() = default;
  DurationPredictor(nn::ParamSet& ps, const std::string& name, int hidden,
                    int kernel, double dropout, Rng& rng);
  /// content: T_ph x H, style: 1 x H. Returns T_ph x 1 in log(frames + 1).
  Var operator()(const Var& content, const Var& style,
                 const nn::Context& ctx) const;

 private:
  nn::Conv1d conv1_, conv2_;
  nn::LayerNorm ln1_, ln2_;
  nn::Linear out_;
  double dropout_ = 0.0;
};

/// Mean squared error against log(frames + 1).
Var duration_loss(const Var& log_pred, const std::vector<int>& frames);

/// Inverse of the log(frames + 1) target, rounded and clamped at zero.
std::vector<int> durations_from_log(const Tensor& log_pred);

/// Repeats row i durations[i] times. Throws when every duration is zero or
/// any is negative.
Var length_regulate(const Var& x, const std::vector<int>& durations);

}  // namespace cantor
