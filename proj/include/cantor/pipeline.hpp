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

// Training loop, classifier pre-training, evaluation and corpus splits.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cantor/config.hpp"
#include "cantor/metrics.hpp"
#include "cantor/model.hpp"

namespace cantor {

/// Raised when training has to stop (non-finite loss, bad inputs).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::string corpus_dir;       // empty: generate in memory
  int corpus_per_class = 24;    // used when corpus_dir is empty
  std::uint64_t corpus_seed = 1234;
  std::string classifier;       // classifier checkpoint path
  std::string out_dir;          // empty: no files written
  std::string preset = "desk";  // desk | paper
  ModelConfig model = ModelConfig::desk();
  LossWeights weights;
  double lr = 2e-4;
  int warmup_steps = 1000;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double clip_norm = 1.0;
  int max_steps = 20000;
  int batch_size = 8;
  int crop_frames = 64;  // <= 0 trains on whole samples
  std::uint64_t seed = 1;
  int checkpoint_every = 1000;
  int log_every = 50;

  /// Binds every key. The model keys start from the current model config.
  void bind(ConfigTable& table);
  /// Throws ConfigError on negative weights, non-positive steps and similar.
  void validate() const;
  /// Preset model plus its optimizer schedule: desk uses lr 1e-3 with 200
  /// warmup steps, paper keeps the defaults above.
  static TrainConfig desk();
  static TrainConfig paper();
  /// Parses flat key-value text. An explicit "preset" is applied first so
  /// that other keys override it.
  static TrainConfig parse(const std::string& text, const std::string& origin);
  static TrainConfig from_file(const std::filesystem::path& path);
  std::string dump() const;
};

struct TrainLogEntry {
  long step = 0;
  LossBreakdown loss;
  double grad_norm = 0.0;
  double lr = 0.0;
};

struct TrainHooks {
  std::function<void(const TrainLogEntry&)> on_log;  // every log_every steps
  /// Stop after this many steps regardless of max_steps (0: no limit).
  int stop_after = 0;
};

struct TrainOutcome {
  std::unique_ptr<AcousticModel> model;
  std::vector<TrainLogEntry> history;  // every step
  double seconds = 0.0;
};

/// Trains on the given samples (reference = target). Writes periodic
/// checkpoints and a TSV loss log under out_dir when it is set. A
/// non-finite loss writes nan_step.txt there and throws TrainingError.
TrainOutcome train_model(const TrainConfig& cfg,
                         const std::vector<SingingSample>& samples,
                         std::shared_ptr<const StyleClassifier> classifier,
                         const TrainHooks& hooks = {});

/// Loads the corpus named by the config (or generates it).
std::vector<SingingSample> load_training_corpus(const TrainConfig& cfg);

// --- splits ------------------------------------------------------------------

enum class Split { kSeen, kOod };
Split split_from_string(const std::string& s);
std::string_view to_string(Split s);
/// Samples of the requested split in corpus order. Throws
/// std::invalid_argument when the split is empty.
std::vector<SingingSample> select_split(const std::vector<SingingSample>& corpus,
                                        Split split);

// --- evaluation ----------------------------------------------------------------

/// Maps a per-frame sequence produced with pred durations onto the frame grid
/// of ref durations, phoneme by phoneme (nearest-frame resampling).
template <typename T>
std::vector<T> warp_by_durations(const std::vector<T>& values,
                                 const std::vector<int>& pred,
                                 const std::vector<int>& ref);

/// Cos of timbre embeddings and FFE of a synthesized contour against a
/// reference sample. pred_durations gives the phoneme timing of the output.
SampleMetric score_against_reference(const StyleClassifier& clf,
                                     const Tensor& mel,
                                     const std::vector<double>& f0,
                                     const std::vector<int>& uv,
                                     const std::vector<int>& pred_durations,
                                     const SingingSample& ref);

struct EvalOptions {
  int limit = 0;  // <= 0: every sample of the split
  std::uint64_t seed = 1;
  std::string figure_dir;  // empty: no figures
  int figures = 3;
};

/// Parallel transfers (target score = reference score) over the samples.
MetricReport evaluate_model(const AcousticModel& model,
                            const std::vector<SingingSample>& samples,
                            Split split, const EvalOptions& opt,
                            const std::string& checkpoint_id);

// --- classifier ------------------------------------------------------------------

/// Classifier pre-training on a corpus with the desk or paper encoder widths.
struct ClassifierRun {
  std::shared_ptr<StyleClassifier> classifier;
  ClassifierReport report;
  double seconds = 0.0;
};
ClassifierRun train_classifier(const std::vector<SingingSample>& corpus,
                               const StyleEncoderConfig& cfg,
                               const ClassifierTrainConfig& train_cfg,
                               std::uint64_t seed);

}  // namespace cantor
