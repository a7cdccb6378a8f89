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

#include "cantor/style_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "cantor/dsp.hpp"

namespace cantor {
namespace {

// Fixed affine map of log-mel into roughly unit range.
Tensor scale_mel(const Tensor& mel) {
  Tensor x = mel;
  x.mat().array() = (x.mat().array() + 6.0) / 3.0;
  return x;
}

int argmax_row(const Tensor& t, int r) {
  int best = 0;
  for (int c = 1; c < t.cols(); ++c)
    if (t(r, c) > t(r, best)) best = c;
  return best;
}

}  // namespace

Var l2_normalize_rows(const Var& x) {
  Var norm = ag::sqrt(ag::add_scalar(ag::sum_cols(ag::square(x)), 1e-12));
  return ag::div_col(x, norm);
}

StyleEncoder::StyleEncoder(nn::ParamSet& ps, const std::string& name,
                           const StyleEncoderConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  int in = dsp::kMelBins;
  for (int l = 0; l < cfg.conv_layers; ++l) {
    convs_.emplace_back(ps, name + ".conv" + std::to_string(l), in, cfg.hidden,
                        5, rng, 1, 2);
    in = cfg.hidden;
  }
  for (int l = 0; l < cfg.transformer_layers; ++l)
    blocks_.emplace_back(ps, name + ".fft" + std::to_string(l), cfg.hidden,
                         cfg.filter, 3, cfg.heads, cfg.dropout, rng);
  timbre_ = nn::Linear(ps, name + ".timbre", cfg.hidden, cfg.embed_dim, rng);
  emotion_ = nn::Linear(ps, name + ".emotion", cfg.hidden, cfg.embed_dim, rng);
}

Var StyleEncoder::features(const Tensor& mel, const nn::Context& ctx) const {
  if (mel.rows() < kMinStyleFrames)
    throw std::invalid_argument("style encoder needs at least " +
                                std::to_string(kMinStyleFrames) +
                                " frames, got " + std::to_string(mel.rows()));
  if (mel.cols() != dsp::kMelBins)
    throw std::invalid_argument("style encoder expects 80 mel bins");
  Var h = ag::constant(scale_mel(mel));
  for (const auto& c : convs_) h = ag::relu(c(h));
  h = ag::add(h, ag::constant(nn::sinusoidal_positions(h.rows(), cfg_.hidden)));
  for (const auto& b : blocks_) h = b(h, h.rows(), ctx);
  return h;
}

StyleEmbeddingPair StyleEncoder::pool_and_project(const Var& features) const {
  Var pooled = ag::mean_rows(features);
  return {l2_normalize_rows(timbre_(pooled)),
          l2_normalize_rows(emotion_(pooled))};
}

StyleEmbeddingPair StyleEncoder::operator()(const Tensor& mel,
                                            const nn::Context& ctx) const {
  return pool_and_project(features(mel, ctx));
}

AmSoftmaxHead::AmSoftmaxHead(nn::ParamSet& ps, const std::string& name,
                             int dim, int classes, Rng& rng) {
  w_ = ps.add(name + ".weight", rng.normal_tensor(dim, classes));
  renormalize();
}

void AmSoftmaxHead::renormalize() {
  Tensor& w = w_.mutable_value();
  for (int c = 0; c < w.cols(); ++c) {
    double n = 0.0;
    for (int r = 0; r < w.rows(); ++r) n += w(r, c) * w(r, c);
    n = std::sqrt(std::max(n, 1e-24));
    for (int r = 0; r < w.rows(); ++r) w(r, c) /= n;
  }
}

Var AmSoftmaxHead::cosines(const Var& embeddings) const {
  return ag::matmul(embeddings, w_);
}

Var am_softmax_loss(const Var& embeddings, const std::vector<int>& labels,
                    const AmSoftmaxHead& head, const AmSoftmaxConfig& cfg) {
  if (embeddings.rows() != static_cast<int>(labels.size()))
    throw std::invalid_argument("am_softmax_loss: label count mismatch");
  Tensor margin(embeddings.rows(), head.classes());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= head.classes())
      throw std::invalid_argument("am_softmax_loss: label out of range");
    margin(static_cast<int>(i), labels[i]) = cfg.margin;
  }
  Var logits = ag::scale(
      ag::sub(head.cosines(embeddings), ag::constant(std::move(margin))),
      cfg.scale);
  Var logp = ag::log_softmax_rows(logits);
  Tensor pick(embeddings.rows(), head.classes());
  for (std::size_t i = 0; i < labels.size(); ++i)
    pick(static_cast<int>(i), labels[i]) = -1.0 / labels.size();
  return ag::sum(ag::mul(logp, ag::constant(std::move(pick))));
}

StyleClassifier::StyleClassifier(const StyleEncoderConfig& cfg,
                                 std::uint64_t seed) {
  Rng rng(seed);
  encoder = StyleEncoder(params, "style", cfg, rng);
  timbre_head = AmSoftmaxHead(params, "style.timbre_head", cfg.embed_dim,
                              kSingerCount, rng);
  emotion_head = AmSoftmaxHead(params, "style.emotion_head", cfg.embed_dim, 2,
                               rng);
}

std::pair<int, int> classify(const StyleClassifier& clf, const Tensor& mel) {
  ag::NoGradGuard ng;
  nn::Context ctx;
  auto emb = clf.encoder(mel, ctx);
  Tensor ct = clf.timbre_head.cosines(emb.timbre).value();
  Tensor ce = clf.emotion_head.cosines(emb.emotion).value();
  return {argmax_row(ct, 0), argmax_row(ce, 0)};
}

ClassifierReport pretrain_classifier(StyleClassifier& clf,
                                     const std::vector<SingingSample>& corpus,
                                     const ClassifierTrainConfig& cfg) {
  std::set<int> singers, emotions;
  for (const auto& s : corpus) {
    singers.insert(s.singer_id);
    emotions.insert(static_cast<int>(s.style.emotion));
  }
  if (singers.size() < 2 || emotions.size() < 2)
    throw std::invalid_argument(
        "classifier pre-training needs at least two timbre and two emotion "
        "classes");

  // Stratified hold-out per (singer, emotion), in corpus order.
  Rng rng(cfg.seed);
  std::vector<int> train, holdout;
  std::map<std::pair<int, int>, std::vector<int>> groups;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    groups[{corpus[i].singer_id, static_cast<int>(corpus[i].style.emotion)}]
        .push_back(static_cast<int>(i));
  for (auto& [key, idx] : groups) {
    const int n_hold = static_cast<int>(
        std::floor(cfg.holdout_fraction * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < idx.size(); ++k)
      (static_cast<int>(k) < n_hold ? holdout : train).push_back(idx[k]);
  }

  nn::Adam opt(clf.params, {.lr = cfg.lr, .warmup_steps = 50});
  nn::Context ctx{true, &rng};
  ClassifierReport rep;
  rep.train_count = static_cast<int>(train.size());
  rep.holdout_count = static_cast<int>(holdout.size());
  bool first = true;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = train.size(); i > 1; --i)
      std::swap(train[i - 1], train[rng.randint(0, static_cast<int>(i) - 1)]);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t b = 0; b < train.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(train.size(), b + cfg.batch_size);
      std::vector<Var> tim, emo;
      std::vector<int> tl, el;
      for (std::size_t k = b; k < e; ++k) {
        const auto& s = corpus[train[k]];
        auto pair = clf.encoder(s.mel, ctx);
        tim.push_back(pair.timbre);
        emo.push_back(pair.emotion);
        tl.push_back(s.singer_id);
        el.push_back(static_cast<int>(s.style.emotion));
      }
      Var lt = am_softmax_loss(ag::concat_rows(tim), tl, clf.timbre_head, cfg.am);
      Var le = am_softmax_loss(ag::concat_rows(emo), el, clf.emotion_head, cfg.am);
      if (first) {
        rep.first_batch_loss = lt.item();
        first = false;
      }
      Var loss = ag::add(lt, le);
      clf.params.zero_grad();
      ag::backward(loss);
      opt.step();
      clf.timbre_head.renormalize();
      clf.emotion_head.renormalize();
      epoch_loss += loss.item();
      ++batches;
    }
    rep.final_loss = batches ? epoch_loss / batches : 0.0;
  }

  int ok_t = 0, ok_e = 0;
  for (int i : holdout) {
    const auto [t, e] = classify(clf, corpus[i].mel);
    ok_t += t == corpus[i].singer_id;
    ok_e += e == static_cast<int>(corpus[i].style.emotion);
  }
  if (!holdout.empty()) {
    rep.timbre_accuracy = static_cast<double>(ok_t) / holdout.size();
    rep.emotion_accuracy = static_cast<double>(ok_e) / holdout.size();
  }
  return rep;
}

}  // namespace cantor
