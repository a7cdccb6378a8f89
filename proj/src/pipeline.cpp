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

#include "cantor/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cantor {
namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Last value of key in flat config text, or empty.
std::string scan_key(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line, value;
  while (std::getline(in, line)) {
    line = line.substr(0, line.find('#'));
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    if (trim(line.substr(0, eq)) == key) value = trim(line.substr(eq + 1));
  }
  return value;
}

std::string step_name(long step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%06ld.ckpt", step);
  return buf;
}

}  // namespace

// --- config --------------------------------------------------------------------

void TrainConfig::bind(ConfigTable& t) {
  t.bind("preset", preset, "model size preset: desk or paper");
  t.bind("corpus_dir", corpus_dir, "corpus directory; empty generates one in memory");
  t.bind("corpus_per_class", corpus_per_class, "samples per (singer, emotion) when generating");
  t.bind("corpus_seed", corpus_seed, "seed of the generated corpus");
  t.bind("classifier", classifier, "pre-trained style classifier checkpoint");
  t.bind("out_dir", out_dir, "checkpoint and log directory");
  t.bind("lambda_dur", weights.dur, "duration loss weight");
  t.bind("lambda_gdiff", weights.gdiff, "F0 Gaussian diffusion loss weight");
  t.bind("lambda_mdiff", weights.mdiff, "UV multinomial diffusion loss weight");
  t.bind("lambda_commit", weights.commit, "commitment loss weight");
  t.bind("lambda_mae", weights.mae, "mel MAE loss weight");
  t.bind("lambda_ssim", weights.ssim, "mel SSIM loss weight");
  t.bind("lr", lr, "peak Adam learning rate");
  t.bind("warmup_steps", warmup_steps, "linear learning-rate warmup");
  t.bind("beta1", beta1, "Adam beta1");
  t.bind("beta2", beta2, "Adam beta2");
  t.bind("clip_norm", clip_norm, "global gradient norm clip (<= 0 disables)");
  t.bind("max_steps", max_steps, "optimizer steps");
  t.bind("batch_size", batch_size, "samples per step");
  t.bind("crop_frames", crop_frames, "training window in frames (<= 0: whole sample)");
  t.bind("seed", seed, "training seed");
  t.bind("checkpoint_every", checkpoint_every, "steps between checkpoints (<= 0: final only)");
  t.bind("log_every", log_every, "steps between log lines");
  model.bind(t);
}

void TrainConfig::validate() const {
  const double w[] = {weights.dur, weights.gdiff, weights.mdiff,
                      weights.commit, weights.mae, weights.ssim};
  for (double x : w)
    if (!(x >= 0.0)) throw ConfigError("loss weights must be >= 0");
  if (max_steps <= 0) throw ConfigError("max_steps must be > 0");
  if (batch_size <= 0) throw ConfigError("batch_size must be > 0");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (crop_frames > 0 && crop_frames < 16)
    throw ConfigError("crop_frames must be <= 0 or >= 16");
  if (corpus_dir.empty() && corpus_per_class <= 0)
    throw ConfigError("corpus_per_class must be > 0");
  if (model.hidden <= 0) throw ConfigError("model.hidden must be > 0");
}

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.preset = "desk";
  c.model = ModelConfig::desk();
  c.lr = 1e-3;
  c.warmup_steps = 200;
  return c;
}

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.preset = "paper";
  c.model = ModelConfig::paper();
  return c;
}

TrainConfig TrainConfig::parse(const std::string& text,
                               const std::string& origin) {
  TrainConfig cfg;
  const std::string preset = scan_key(text, "preset");
  if (!preset.empty()) {
    if (preset == "desk") {
      cfg = TrainConfig::desk();
    } else if (preset == "paper") {
      cfg = TrainConfig::paper();
    } else {
      throw ConfigError(origin + ": unknown preset '" + preset + "'");
    }
  }
  ConfigTable t;
  cfg.bind(t);
  t.parse(text, origin);
  cfg.model.resolve();
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::string TrainConfig::dump() const {
  TrainConfig copy = *this;
  ConfigTable t;
  copy.bind(t);
  return t.dump();
}

// --- training --------------------------------------------------------------------

std::vector<SingingSample> load_training_corpus(const TrainConfig& cfg) {
  if (!cfg.corpus_dir.empty()) return read_corpus(cfg.corpus_dir);
  return build_corpus({.samples_per_class = cfg.corpus_per_class,
                       .seed = cfg.corpus_seed,
                       .singers = {}});
}

TrainOutcome train_model(const TrainConfig& cfg,
                         const std::vector<SingingSample>& samples,
                         std::shared_ptr<const StyleClassifier> classifier,
                         const TrainHooks& hooks) {
  cfg.validate();
  if (!classifier) throw TrainingError("missing style classifier");
  if (samples.empty()) throw TrainingError("no training samples");
  const auto t0 = std::chrono::steady_clock::now();

  TrainOutcome out;
  out.model = std::make_unique<AcousticModel>(cfg.model, classifier, cfg.seed);
  AcousticModel& model = *out.model;
  model.stats() = compute_corpus_stats(samples);
  std::vector<TrainExample> examples;
  examples.reserve(samples.size());
  for (const auto& s : samples) examples.push_back(model.prepare(s));

  nn::Adam opt(model.params(), {.lr = cfg.lr,
                                .beta1 = cfg.beta1,
                                .beta2 = cfg.beta2,
                                .warmup_steps = cfg.warmup_steps,
                                .clip_norm = cfg.clip_norm});
  Rng rng(cfg.seed ^ 0x5eedf00dULL);

  std::ofstream log;
  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    std::ofstream(fs::path(cfg.out_dir) / "config.txt") << cfg.dump();
    log.open(fs::path(cfg.out_dir) / "train_log.tsv");
    log << "step\ttotal\tdur\tgdiff\tmdiff\tcommit\tmae\tssim\tgrad_norm\tlr\n";
  }
  auto save = [&](const std::string& name, long step) {
    if (cfg.out_dir.empty()) return;
    save_checkpoint(model.to_checkpoint(step), fs::path(cfg.out_dir) / name);
  };

  // Epoch-wise shuffled order, fixed by the seed.
  std::vector<int> order(examples.size());
  std::size_t cursor = order.size();
  const int steps = hooks.stop_after > 0 ? std::min(hooks.stop_after, cfg.max_steps)
                                         : cfg.max_steps;
  for (long step = 1; step <= steps; ++step) {
    std::vector<const TrainExample*> batch;
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        for (std::size_t i = order.size(); i > 1; --i)
          std::swap(order[i - 1], order[rng.randint(0, static_cast<int>(i) - 1)]);
        cursor = 0;
      }
      batch.push_back(&examples[order[cursor++]]);
    }
    auto r = model.batch_loss(batch, cfg.weights, cfg.crop_frames, rng);
    if (!std::isfinite(r.parts.total)) {
      std::ostringstream dump;
      dump << "step " << step << "\ntotal " << r.parts.total << "\ndur "
           << r.parts.dur << "\ngdiff " << r.parts.gdiff << "\nmdiff "
           << r.parts.mdiff << "\ncommit " << r.parts.commit << "\nmae "
           << r.parts.mae << "\nssim " << r.parts.ssim << "\nbatch";
      for (const auto* ex : batch) dump << ' ' << ex->sample->id;
      dump << '\n';
      if (!cfg.out_dir.empty()) {
        std::ofstream(fs::path(cfg.out_dir) / "nan_step.txt") << dump.str();
        save("nan_step.ckpt", step - 1);
      }
      throw TrainingError("non-finite loss at step " + std::to_string(step));
    }
    model.params().zero_grad();
    ag::backward(r.total);
    TrainLogEntry entry{step, r.parts, 0.0, opt.current_lr()};
    entry.grad_norm = opt.step();
    entry.lr = opt.current_lr();
    model.update_codebooks(r, rng);
    out.history.push_back(entry);

    if (log.is_open())
      log << step << '\t' << r.parts.total << '\t' << r.parts.dur << '\t'
          << r.parts.gdiff << '\t' << r.parts.mdiff << '\t' << r.parts.commit
          << '\t' << r.parts.mae << '\t' << r.parts.ssim << '\t'
          << entry.grad_norm << '\t' << entry.lr << '\n';
    if (hooks.on_log && cfg.log_every > 0 && step % cfg.log_every == 0)
      hooks.on_log(entry);
    if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 &&
        step != steps)
      save(step_name(step), step);
  }
  save("final.ckpt", steps);
  out.seconds = seconds_since(t0);
  return out;
}

// --- splits ------------------------------------------------------------------------

Split split_from_string(const std::string& s) {
  if (s == "seen") return Split::kSeen;
  if (s == "ood") return Split::kOod;
  throw std::invalid_argument("unknown split '" + s + "' (expected seen or ood)");
}

std::string_view to_string(Split s) { return s == Split::kSeen ? "seen" : "ood"; }

std::vector<SingingSample> select_split(const std::vector<SingingSample>& corpus,
                                        Split split) {
  std::vector<SingingSample> out;
  for (const auto& s : corpus)
    if (is_out_of_domain(s) == (split == Split::kOod)) out.push_back(s);
  if (out.empty())
    throw std::invalid_argument("split '" + std::string(to_string(split)) +
                                "' is empty");
  return out;
}

// --- evaluation ----------------------------------------------------------------------

template <typename T>
std::vector<T> warp_by_durations(const std::vector<T>& values,
                                 const std::vector<int>& pred,
                                 const std::vector<int>& ref) {
  if (pred.size() != ref.size())
    throw std::invalid_argument("warp: phoneme counts differ");
  long total = 0;
  for (int d : pred) total += d;
  if (total != static_cast<long>(values.size()))
    throw std::invalid_argument("warp: durations do not cover the sequence");
  std::vector<T> out;
  long start = 0;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (int j = 0; j < ref[p]; ++j) {
      if (pred[p] == 0) {
        // Nothing was generated for this phoneme: hold the neighbour frame.
        const long k = std::clamp<long>(start == 0 ? 0 : start - 1, 0,
                                        static_cast<long>(values.size()) - 1);
        out.push_back(values.empty() ? T{} : values[k]);
        continue;
      }
      const long k = start + static_cast<long>((j + 0.5) * pred[p] / ref[p]);
      out.push_back(values[std::min<long>(k, start + pred[p] - 1)]);
    }
    start += pred[p];
  }
  return out;
}

template std::vector<double> warp_by_durations(const std::vector<double>&,
                                               const std::vector<int>&,
                                               const std::vector<int>&);
template std::vector<int> warp_by_durations(const std::vector<int>&,
                                            const std::vector<int>&,
                                            const std::vector<int>&);

SampleMetric score_against_reference(const StyleClassifier& clf,
                                     const Tensor& mel,
                                     const std::vector<double>& f0,
                                     const std::vector<int>& uv,
                                     const std::vector<int>& pred_durations,
                                     const SingingSample& ref) {
  ag::NoGradGuard ng;
  const nn::Context ctx{false, nullptr};
  // Put the synthesized mel on the reference phoneme timeline.
  std::vector<int> rows(mel.rows());
  for (int f = 0; f < mel.rows(); ++f) rows[f] = f;
  rows = warp_by_durations(rows, pred_durations, ref.phoneme_durations);
  Tensor warped(static_cast<int>(rows.size()), mel.cols());
  for (int f = 0; f < warped.rows(); ++f)
    for (int c = 0; c < mel.cols(); ++c) warped(f, c) = mel(rows[f], c);
  const Tensor a = clf.encoder(warped, ctx).timbre.value();
  const Tensor b = clf.encoder(ref.mel, ctx).timbre.value();
  SampleMetric m;
  m.reference_id = ref.id;
  m.cos = cosine_similarity(std::span<const double>(a.data(), a.size()),
                            std::span<const double>(b.data(), b.size()));
  const auto wf0 = warp_by_durations(f0, pred_durations, ref.phoneme_durations);
  const auto wuv = warp_by_durations(uv, pred_durations, ref.phoneme_durations);
  m.ffe = ffe(wf0, wuv, ref.f0, ref.uv);
  return m;
}

MetricReport evaluate_model(const AcousticModel& model,
                            const std::vector<SingingSample>& samples,
                            Split split, const EvalOptions& opt,
                            const std::string& checkpoint_id) {
  if (samples.empty()) throw std::invalid_argument("evaluation split is empty");
  const std::size_t n = opt.limit > 0
                            ? std::min<std::size_t>(samples.size(), opt.limit)
                            : samples.size();
  MetricReport rep;
  rep.checkpoint = checkpoint_id;
  rep.split = std::string(to_string(split));
  if (!opt.figure_dir.empty()) fs::create_directories(opt.figure_dir);
  for (std::size_t i = 0; i < n; ++i) {
    const SingingSample& ref = samples[i];
    const auto syn = model.synthesize(ref.score, ref.mel, ref.f0, ref.uv,
                                      opt.seed + i);
    SampleMetric m = score_against_reference(model.classifier(), syn.mel,
                                             syn.f0, syn.uv, syn.durations, ref);
    m.id = ref.id + "/parallel";
    rep.per_sample.push_back(m);
    if (!opt.figure_dir.empty() && static_cast<int>(i) < opt.figures) {
      std::vector<PlotSample> panels{{"reference " + ref.id, ref.mel, ref.f0},
                                     {"synthesized", syn.mel, syn.f0}};
      plot_comparison(panels, fs::path(opt.figure_dir) / (ref.id + ".png"));
    }
  }
  rep.finalize();
  return rep;
}

// --- classifier ----------------------------------------------------------------------

ClassifierRun train_classifier(const std::vector<SingingSample>& corpus,
                               const StyleEncoderConfig& cfg,
                               const ClassifierTrainConfig& train_cfg,
                               std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  ClassifierRun run;
  run.classifier = std::make_shared<StyleClassifier>(cfg, seed);
  run.report = pretrain_classifier(*run.classifier, corpus, train_cfg);
  run.seconds = seconds_since(t0);
  return run;
}

}  // namespace cantor
