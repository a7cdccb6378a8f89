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

// Mel-input timbre/emotion encoder trained as an additive-margin classifier.

#pragma once

#include <string>
#include <vector>

#include "cantor/corpus.hpp"
#include "cantor/nn.hpp"

namespace cantor {

using ag::Var;

struct StyleEncoderConfig {
  int hidden = 64;
  int embed_dim = 256;
  int conv_layers = 2;  // each halves the frame rate
  int transformer_layers = 1;
  int heads = 2;
  int filter = 128;
  double dropout = 0.1;
};

struct StyleEmbeddingPair {
  Var timbre;   // 1 x embed_dim, unit norm
  Var emotion;  // 1 x embed_dim, unit norm
};

/// Minimum number of mel frames accepted by the encoder.
inline constexpr int kMinStyleFrames = 8;

/// Row-wise L2 normalisation x / sqrt(|x|^2 + 1e-12).
Var l2_normalize_rows(const Var& x);

class StyleEncoder {
 public:
  StyleEncoder() = default;
  StyleEncoder(nn::ParamSet& ps, const std::string& name,
               const StyleEncoderConfig& cfg, Rng& rng);

  /// mel: frames x 80 log-amplitude. Throws below kMinStyleFrames frames.
  StyleEmbeddingPair operator()(const Tensor& mel,
                                const nn::Context& ctx) const;
  /// Frame features before pooling (conv stack and transformer).
  Var features(const Tensor& mel, const nn::Context& ctx) const;
  /// Mean pooling over time followed by the two heads.
  StyleEmbeddingPair pool_and_project(const Var& features) const;
  const StyleEncoderConfig& config() const { return cfg_; }

 private:
  StyleEncoderConfig cfg_;
  std::vector<nn::Conv1d> convs_;
  std::vector<nn::FFTBlock> blocks_;
  nn::Linear timbre_, emotion_;
};

struct AmSoftmaxConfig {
  double margin = 0.2;
  double scale = 30.0;
};

class AmSoftmaxHead {
 public:
  AmSoftmaxHead() = default;
  AmSoftmaxHead(nn::ParamSet& ps, const std::string& name, int dim,
                int classes, Rng& rng);
  /// Rescales every class column to unit norm.
  void renormalize();
  /// Cosine of each row of unit-norm embeddings against every class.
  Var cosines(const Var& embeddings) const;
  const Var& weight() const { return w_; }
  int classes() const { return w_.cols(); }

 private:
  Var w_;  // dim x classes
};

/// Mean over rows of -log(e^{s(cos_y - m)} / (e^{s(cos_y - m)} +
/// sum_{j != y} e^{s cos_j})). embeddings must be unit-norm rows.
Var am_softmax_loss(const Var& embeddings, const std::vector<int>& labels,
                    const AmSoftmaxHead& head, const AmSoftmaxConfig& cfg);

/// Encoder plus both classification heads; everything the pre-training step
/// updates and the main model later freezes.
struct StyleClassifier {
  nn::ParamSet params;
  StyleEncoder encoder;
  AmSoftmaxHead timbre_head, emotion_head;

  StyleClassifier(const StyleEncoderConfig& cfg, std::uint64_t seed);
};

struct ClassifierTrainConfig {
  int epochs = 12;
  int batch_size = 16;
  double lr = 1e-3;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 7;
  AmSoftmaxConfig am;
};

struct ClassifierReport {
  double timbre_accuracy = 0.0;   // held-out
  double emotion_accuracy = 0.0;  // held-out
  double first_batch_loss = 0.0;  // timbre head, before any update
  double final_loss = 0.0;        // mean training loss of the last epoch
  int train_count = 0, holdout_count = 0;
};

/// Labels: timbre = singer_id, emotion = StyleClassLabel.emotion. Throws
/// std::invalid_argument if either label set has fewer than two classes.
ClassifierReport pretrain_classifier(StyleClassifier& clf,
                                     const std::vector<SingingSample>& corpus,
                                     const ClassifierTrainConfig& cfg);

/// Predicted class per head for one mel, by largest cosine.
std::pair<int, int> classify(const StyleClassifier& clf, const Tensor& mel);

}  // namespace cantor
