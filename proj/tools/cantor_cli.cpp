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

// cantor: corpus generation, training, synthesis, evaluation and plotting.
//
// Errors go to stderr as one JSON line {"error": <category>, "message": ..}
// with a per-category exit code.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cantor/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cantor;

namespace {

enum Exit {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kConfig = 3,
  kIo = 4,
  kCheckpoint = 5,
  kInput = 6,
  kTraining = 7,
};

int fail(const char* category, int code, const std::string& message) {
  nlohmann::json j{{"error", category}, {"message", message}};
  std::cerr << j.dump() << '\n';
  return code;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os) throw IoError("cannot write " + path.string());
}

std::vector<SingingSample> corpus_or_generated(const std::string& dir,
                                               int per_class,
                                               std::uint64_t seed) {
  if (!dir.empty()) return read_corpus(dir);
  return build_corpus(
      {.samples_per_class = per_class, .seed = seed, .singers = {}});
}

// A sample JSON from a corpus, or a synthesize output directory.
PlotSample load_plot_input(const fs::path& p) {
  if (fs::is_directory(p)) {
    const Tensor mel = read_matrix_f32(p / "mel.bin");
    const Tensor pitch = read_matrix_f32(p / "pitch.bin");
    PlotSample s{p.filename().string(), mel, {}};
    for (int f = 0; f < pitch.rows(); ++f)
      s.f0.push_back(pitch(f, 1) > 0.5 ? pitch(f, 0) : 0.0);
    return s;
  }
  SingingSample s = read_sample(p);
  return {s.id, s.mel, s.f0};
}

// --- commands -------------------------------------------------------------------

struct Options {
  std::string out, corpus, config, ckpt, score, ref, mode = "parallel",
                                                   split = "seen", preset = "desk",
                                                   figures;
  std::vector<std::string> inputs;
  std::uint64_t seed = 1234;
  int per_class = 24;
  int epochs = 12;
  int limit = 0;
};

int gen_corpus(const Options& o) {
  auto corpus = build_corpus(
      {.samples_per_class = o.per_class, .seed = o.seed, .singers = {}});
  write_corpus(o.out, corpus);
  std::cout << nlohmann::json{{"samples", corpus.size()}, {"out", o.out}}.dump()
            << '\n';
  return kOk;
}

int train_classifier_cmd(const Options& o) {
  const auto corpus = read_corpus(o.corpus);
  if (o.preset != "desk" && o.preset != "paper")
    throw ConfigError("unknown preset '" + o.preset + "'");
  const ModelConfig mc = o.preset == "desk" ? ModelConfig::desk() : ModelConfig::paper();
  ClassifierTrainConfig tc;
  tc.epochs = o.epochs;
  tc.seed = o.seed;
  const auto run = train_classifier(corpus, mc.style, tc, o.seed);
  save_checkpoint(classifier_to_checkpoint(*run.classifier), o.out);
  std::cout << nlohmann::ordered_json{
                   {"timbre_accuracy", run.report.timbre_accuracy},
                   {"emotion_accuracy", run.report.emotion_accuracy},
                   {"first_batch_loss", run.report.first_batch_loss},
                   {"final_loss", run.report.final_loss},
                   {"train", run.report.train_count},
                   {"holdout", run.report.holdout_count},
                   {"seconds", run.seconds}}
                   .dump()
            << '\n';
  return kOk;
}

int train_cmd(const Options& o) {
  const TrainConfig cfg = TrainConfig::from_file(o.config);
  if (cfg.classifier.empty())
    throw ConfigError("classifier checkpoint not set (key 'classifier')");
  if (!fs::exists(cfg.classifier))
    throw CheckpointError("classifier checkpoint not found: " + cfg.classifier);
  auto clf = classifier_from_checkpoint(load_checkpoint(cfg.classifier));
  const auto seen = select_split(load_training_corpus(cfg), Split::kSeen);
  TrainHooks hooks;
  hooks.on_log = [](const TrainLogEntry& e) {
    std::printf("step %ld total %.5f dur %.4f gdiff %.4f mdiff %.4f commit %.5f "
                "mae %.4f ssim %.4f grad %.3f lr %.2e\n",
                e.step, e.loss.total, e.loss.dur, e.loss.gdiff, e.loss.mdiff,
                e.loss.commit, e.loss.mae, e.loss.ssim, e.grad_norm, e.lr);
    std::fflush(stdout);
  };
  const auto outcome = train_model(cfg, seen, clf, hooks);
  std::printf("done: %zu steps in %.1f s\n", outcome.history.size(),
              outcome.seconds);
  return kOk;
}

int synthesize_cmd(const Options& o) {
  const AcousticModel model = AcousticModel::from_checkpoint(load_checkpoint(o.ckpt));
  const SingingSample ref = read_sample(o.ref);
  MusicalScore target;
  if (o.mode == "parallel") {
    target = ref.score;
    if (!o.score.empty() &&
        score_to_json(read_score_file(o.score)) != score_to_json(ref.score))
      throw std::invalid_argument(
          "parallel mode needs the target score to equal the reference score");
  } else if (o.mode == "nonparallel") {
    if (o.score.empty())
      throw std::invalid_argument("nonparallel mode needs --score");
    target = read_score_file(o.score);
  } else {
    throw std::invalid_argument("unknown mode '" + o.mode + "'");
  }
  const auto syn = model.synthesize(target, ref.mel, ref.f0, ref.uv, o.seed);
  fs::create_directories(o.out);
  const fs::path dir(o.out);
  write_matrix_f32(dir / "mel.bin", syn.mel);
  Tensor pitch(syn.mel.rows(), 2);
  for (int f = 0; f < pitch.rows(); ++f) {
    pitch(f, 0) = syn.f0[f];
    pitch(f, 1) = syn.uv[f];
  }
  write_matrix_f32(dir / "pitch.bin", pitch);
  nlohmann::ordered_json meta{{"mode", o.mode},
                              {"seed", o.seed},
                              {"reference", ref.id},
                              {"frames", syn.mel.rows()},
                              {"durations", syn.durations}};
  if (o.mode == "parallel") {
    const SampleMetric m = score_against_reference(
        model.classifier(), syn.mel, syn.f0, syn.uv, syn.durations, ref);
    meta["cos"] = m.cos;
    meta["ffe"] = m.ffe;
  }
  write_text(dir / "result.json", meta.dump(2) + "\n");
  plot_comparison({{"reference " + ref.id, ref.mel, ref.f0},
                   {"synthesized", syn.mel, syn.f0}},
                  dir / "comparison.png");
  std::cout << meta.dump() << '\n';
  return kOk;
}

int evaluate_cmd(const Options& o) {
  const AcousticModel model = AcousticModel::from_checkpoint(load_checkpoint(o.ckpt));
  const Split split = split_from_string(o.split);
  const auto samples =
      select_split(corpus_or_generated(o.corpus, o.per_class, o.seed), split);
  EvalOptions opt;
  opt.limit = o.limit;
  opt.figure_dir = o.figures;
  const MetricReport rep = evaluate_model(model, samples, split, opt, o.ckpt);
  write_text(o.out, rep.to_json() + "\n");
  std::cout << nlohmann::ordered_json{{"cos", rep.cos},
                                      {"ffe", rep.ffe},
                                      {"samples", rep.per_sample.size()}}
                   .dump()
            << '\n';
  return kOk;
}

int plot_cmd(const Options& o) {
  std::vector<PlotSample> panels;
  for (const auto& p : o.inputs) panels.push_back(load_plot_input(p));
  plot_comparison(panels, o.out);
  return kOk;
}

int describe_cmd() {
  TrainConfig cfg;
  ConfigTable t;
  cfg.bind(t);
  std::cout << t.describe();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cantor: singing voice style transfer acoustic model"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-corpus", "generate the synthetic corpus");
  gen->add_option("--out", o.out, "output directory")->required();
  gen->add_option("--seed", o.seed, "corpus seed");
  gen->add_option("--per-class", o.per_class, "samples per (singer, emotion)");

  auto* tcl = app.add_subcommand("train-classifier", "pre-train the style classifier");
  tcl->add_option("--corpus", o.corpus, "corpus directory")->required();
  tcl->add_option("--out", o.out, "classifier checkpoint")->required();
  tcl->add_option("--preset", o.preset, "desk or paper widths");
  tcl->add_option("--epochs", o.epochs, "training epochs");
  tcl->add_option("--seed", o.seed, "seed");

  auto* tr = app.add_subcommand("train", "train the acoustic model");
  tr->add_option("--config", o.config, "key = value config file")->required();

  auto* syn = app.add_subcommand("synthesize", "synthesize from a score and a reference");
  syn->add_option("--ckpt", o.ckpt, "model checkpoint")->required();
  syn->add_option("--score", o.score, "target score JSON");
  syn->add_option("--ref", o.ref, "reference sample JSON")->required();
  syn->add_option("--mode", o.mode, "parallel or nonparallel");
  syn->add_option("--seed", o.seed, "sampling seed");
  syn->add_option("--out", o.out, "output directory")->required();

  auto* ev = app.add_subcommand("evaluate", "Cos and FFE over a split");
  ev->add_option("--ckpt", o.ckpt, "model checkpoint")->required();
  ev->add_option("--split", o.split, "seen or ood")->required();
  ev->add_option("--out", o.out, "report JSON")->required();
  ev->add_option("--corpus", o.corpus, "corpus directory (default: regenerate)");
  ev->add_option("--per-class", o.per_class, "regenerated corpus size");
  ev->add_option("--seed", o.seed, "regenerated corpus seed");
  ev->add_option("--limit", o.limit, "evaluate at most N samples");
  ev->add_option("--figures", o.figures, "directory for comparison figures");

  auto* pl = app.add_subcommand("plot", "mel and F0 comparison figure");
  pl->add_option("--inputs", o.inputs, "sample JSONs or synthesize output dirs")
      ->required();
  pl->add_option("--out", o.out, "PNG path")->required();

  auto* desc = app.add_subcommand("describe-config", "list training config keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", kUsage, e.what());
  }

  try {
    if (*gen) return gen_corpus(o);
    if (*tcl) return train_classifier_cmd(o);
    if (*tr) return train_cmd(o);
    if (*syn) return synthesize_cmd(o);
    if (*ev) return evaluate_cmd(o);
    if (*pl) return plot_cmd(o);
    if (*desc) return describe_cmd();
  } catch (const ConfigError& e) {
    return fail("config", kConfig, e.what());
  } catch (const CheckpointError& e) {
    return fail("checkpoint", kCheckpoint, e.what());
  } catch (const IoError& e) {
    return fail("io", kIo, e.what());
  } catch (const fs::filesystem_error& e) {
    return fail("io", kIo, e.what());
  } catch (const TrainingError& e) {
    return fail("training", kTraining, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail("input", kInput, e.what());
  } catch (const std::invalid_argument& e) {
    return fail("input", kInput, e.what());
  } catch (const std::out_of_range& e) {
    return fail("input", kInput, e.what());
  } catch (const std::exception& e) {
    return fail("internal", kInternal, e.what());
  }
  return kInternal;
}
