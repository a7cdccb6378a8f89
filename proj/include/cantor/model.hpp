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

// Full acoustic model: content encoders, duration predictor, UMLN, reference
// style adaptor, pitch predictor and mel decoder, plus the ablation
// fallbacks and checkpoint conversion.

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cantor/checkpoint.hpp"
#include "cantor/config.hpp"
#include "cantor/corpus.hpp"
#include "cantor/decoder.hpp"
#include "cantor/frontend.hpp"
#include "cantor/pitch.hpp"
#include "cantor/rsa.hpp"
#include "cantor/style_encoder.hpp"
#include "cantor/umln.hpp"

namespace cantor {

struct ModelConfig {
  int hidden = 256;  // content / style / condition width
  EncoderConfig encoder;
  int duration_kernel = 3;
  StyleEncoderConfig style;
  UmlnConfig umln;
  RsaConfig rsa;
  PitchConfig pitch;
  DecoderConfig decoder;
  int fallback_kernel = 5;

  bool use_umln = true;
  bool use_rsa = true;
  bool use_pitch_diffusion = true;   // false: regression fallback
  bool use_diffusion_decoder = true;  // false: convolutional fallback
  /// Pitch models predict log2 F0 relative to the sounding note.
  bool pitch_note_relative = false;

  static ModelConfig paper();
  /// Reduced widths and depths for single-core CPU training.
  static ModelConfig desk();
  /// Copies hidden into every dependent width.
  void resolve();
  /// Registers every field under "model.".
  void bind(ConfigTable& table);
};

/// Corpus-level normalisation statistics persisted with the model.
struct CorpusStats {
  PitchStats pitch;           // absolute log2 F0
  MelRange mel;
  PitchStats pitch_relative;  // log2 F0 minus the note track
};
CorpusStats compute_corpus_stats(const std::vector<SingingSample>& corpus);

struct StyleVectors {
  Tensor timbre, emotion;  // 1 x hidden each, unit norm
};

/// Per-sample tensors precomputed once for training.
struct TrainExample {
  const SingingSample* sample = nullptr;
  std::vector<int> phoneme_ids;
  PitchTarget pitch;
  Tensor pitch_features;  // T x 2
  Tensor mel_norm;        // T x 80 in [0, 1]
  StyleVectors style;
};

struct LossWeights {
  double dur = 1.0, gdiff = 1.0, mdiff = 1.0, commit = 1.0, mae = 1.0,
         ssim = 1.0;
};

struct LossBreakdown {
  double dur = 0, gdiff = 0, mdiff = 0, commit = 0, mae = 0, ssim = 0,
         total = 0;
};

/// Frame-level F0/UV regressor used when the pitch diffusion is ablated.
class PitchRegressor {
 public:
  PitchRegressor() = default;
  PitchRegressor(nn::ParamSet& ps, const std::string& name, int hidden,
                 int kernel, Rng& rng);
  struct Output {
    Var f0;      // T x 1
    Var logits;  // T x 2
  };
  Output operator()(const Var& cond) const;

 private:
  nn::Conv1d conv1_, conv2_;
  nn::LayerNorm ln1_, ln2_;
  nn::Linear out_;
};

/// Non-diffusion convolutional mel decoder used when the decoder is ablated.
class ConvMelDecoder {
 public:
  ConvMelDecoder() = default;
  ConvMelDecoder(nn::ParamSet& ps, const std::string& name, int hidden,
                 int kernel, Rng& rng);
  /// Normalised mel in [0, 1].
  Var operator()(const Var& cond) const;

 private:
  std::vector<nn::Conv1d> convs_;
  nn::Linear out_;
};

class AcousticModel {
 public:
  struct BatchResult {
    Var total;
    LossBreakdown parts;
    std::vector<Tensor> rq_inputs;
    std::vector<RqResult> rq_results;
  };

  struct Synthesis {
    Tensor mel;  // frames x 80, log amplitude
    std::vector<double> f0;
    std::vector<int> uv;
    std::vector<int> durations;
  };

  AcousticModel(const ModelConfig& cfg,
                std::shared_ptr<const StyleClassifier> classifier,
                std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  RqCodebooks& codebooks() { return books_; }
  const RqCodebooks& codebooks() const { return books_; }
  CorpusStats& stats() { return stats_; }
  const CorpusStats& stats() const { return stats_; }
  const StyleClassifier& classifier() const { return *classifier_; }
  std::shared_ptr<const StyleClassifier> classifier_ptr() const {
    return classifier_;
  }

  /// Frozen timbre and emotion embeddings of a mel.
  StyleVectors style_of(const Tensor& mel) const;
  TrainExample prepare(const SingingSample& s) const;

  /// Mean loss over a batch in training mode. Targets are cut to a random
  /// window of at most crop frames (crop <= 0 keeps whole samples).
  BatchResult batch_loss(const std::vector<const TrainExample*>& batch,
                         const LossWeights& w, int crop, Rng& rng) const;
  void update_codebooks(const BatchResult& r, Rng& rng);

  /// Inference path. durations, when given, replace the predicted ones.
  Synthesis synthesize(const MusicalScore& target, const Tensor& ref_mel,
                       const std::vector<double>& ref_f0,
                       const std::vector<int>& ref_uv, std::uint64_t seed,
                       const std::vector<int>* durations = nullptr) const;

  /// Every parameter, the codebooks, statistics, schedules, the frozen
  /// classifier and a config snapshot.
  Checkpoint to_checkpoint(long step = 0) const;
  static AcousticModel from_checkpoint(const Checkpoint& ck);

 private:
  Var content(const TrainExample& ex, const nn::Context& ctx) const;

  ModelConfig cfg_;
  std::shared_ptr<const StyleClassifier> classifier_;
  nn::ParamSet params_;
  PhonemeEncoder phonemes_;
  NoteEncoder notes_;
  DurationPredictor duration_;
  Umln umln_;
  ConvStyleEncoder reference_;
  AlignAttention align_;
  RqCodebooks books_;
  PitchPredictor pitch_;
  PitchRegressor pitch_fallback_;
  nn::Linear pitch_proj_;
  MelDecoder decoder_;
  ConvMelDecoder decoder_fallback_;
  CorpusStats stats_;
};

// Classifier persistence.
Checkpoint classifier_to_checkpoint(const StyleClassifier& clf);
std::shared_ptr<StyleClassifier> classifier_from_checkpoint(
    const Checkpoint& ck);

/// Copies tensors named "<prefix><param>" into a parameter set. Throws
/// CheckpointError naming the block on a missing block or shape mismatch.
void load_params(nn::ParamSet& ps, const Checkpoint& ck,
                 const std::string& prefix);
void store_params(const nn::ParamSet& ps, Checkpoint& ck,
                  const std::string& prefix);

}  // namespace cantor
