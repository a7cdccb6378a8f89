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

#include "cantor/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cantor/dsp.hpp"

namespace cantor {

// --- configuration -----------------------------------------------------------

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.resolve();
  return c;
}

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.hidden = 64;
  c.encoder.layers = 2;
  c.encoder.kernel = 5;
  c.encoder.filter = 128;
  c.encoder.heads = 2;
  c.encoder.dropout = 0.1;
  c.style.hidden = 64;
  c.style.filter = 128;
  c.rsa.conv_layers = 3;
  c.rsa.f0_embed = 16;
  c.rsa.rq_codes = 32;
  c.pitch.residual = 48;
  c.pitch.layers = 6;
  c.pitch.dilation_cycle = 3;
  c.decoder.residual = 64;
  c.decoder.layers = 8;
  c.decoder.dilation_cycle = 4;
  c.pitch.weighted_loss = false;
  c.pitch_note_relative = true;
  c.resolve();
  return c;
}

void ModelConfig::resolve() {
  encoder.hidden = hidden;
  style.embed_dim = hidden;
  rsa.hidden = hidden;
  pitch.cond_dim = hidden;
  decoder.cond_dim = hidden;
}

void ModelConfig::bind(ConfigTable& t) {
  t.bind("model.hidden", hidden, "content, style and condition width");
  t.bind("model.encoder_layers", encoder.layers, "FFT blocks in the phoneme encoder");
  t.bind("model.encoder_kernel", encoder.kernel, "FFT block conv width");
  t.bind("model.encoder_filter", encoder.filter, "FFT block filter width");
  t.bind("model.heads", encoder.heads, "attention heads in the encoders");
  t.bind("model.dropout", encoder.dropout, "dropout in encoders and duration predictor");
  t.bind("model.duration_kernel", duration_kernel, "duration predictor conv width");
  t.bind("model.style_hidden", style.hidden, "style classifier conv width");
  t.bind("model.style_filter", style.filter, "style classifier FFT filter width");
  t.bind("model.umln_p", umln.p, "probability of the perturbed UMLN branch");
  t.bind("model.rsa_conv_layers", rsa.conv_layers, "reference encoder conv layers");
  t.bind("model.rsa_kernel", rsa.kernel, "reference encoder conv width");
  t.bind("model.rsa_f0_embed", rsa.f0_embed, "reference pitch embedding width");
  t.bind("model.rq_depth", rsa.rq_depth, "residual quantiser depth");
  t.bind("model.rq_codes", rsa.rq_codes, "codes per codebook");
  t.bind("model.rq_decay", rsa.ema_decay, "codebook EMA decay");
  t.bind("model.rq_stale_limit", rsa.stale_limit, "updates before an unused code is re-seeded");
  t.bind("model.align_layers", rsa.attn_layers, "alignment attention layers");
  t.bind("model.align_heads", rsa.attn_heads, "alignment attention heads");
  t.bind("model.pitch_residual", pitch.residual, "pitch denoiser residual width");
  t.bind("model.pitch_layers", pitch.layers, "pitch denoiser layers");
  t.bind("model.pitch_dilation_cycle", pitch.dilation_cycle, "pitch denoiser dilation cycle");
  t.bind("model.pitch_steps", pitch.steps, "pitch diffusion steps");
  t.bind("model.pitch_beta_1", pitch.beta_1, "first pitch diffusion beta");
  t.bind("model.pitch_beta_max", pitch.beta_max, "last pitch diffusion beta");
  t.bind("model.pitch_weighted_loss", pitch.weighted_loss, "weight the noise loss per step");
  t.bind("model.decoder_residual", decoder.residual, "mel decoder residual width");
  t.bind("model.decoder_layers", decoder.layers, "mel decoder layers");
  t.bind("model.decoder_dilation_cycle", decoder.dilation_cycle, "mel decoder dilation cycle");
  t.bind("model.decoder_steps", decoder.steps, "mel decoder diffusion steps");
  t.bind("model.decoder_beta_min", decoder.beta_min, "VPSDE b_min");
  t.bind("model.decoder_beta_max", decoder.beta_max, "VPSDE b_max");
  t.bind("model.fallback_kernel", fallback_kernel, "conv width of ablation fallbacks");
  t.bind("model.use_umln", use_umln, "enable UMLN");
  t.bind("model.use_rsa", use_rsa, "enable the reference style adaptor");
  t.bind("model.use_pitch_diffusion", use_pitch_diffusion, "diffusion pitch predictor (else regression)");
  t.bind("model.use_diffusion_decoder", use_diffusion_decoder, "diffusion mel decoder (else convolutional)");
  t.bind("model.pitch_note_relative", pitch_note_relative, "predict log2 F0 relative to the score note");
}

CorpusStats compute_corpus_stats(const std::vector<SingingSample>& corpus) {
  return {compute_pitch_stats(corpus), compute_mel_range(corpus),
          compute_note_relative_stats(corpus)};
}

// --- fallbacks ---------------------------------------------------------------

PitchRegressor::PitchRegressor(nn::ParamSet& ps, const std::string& name,
                               int hidden, int kernel, Rng& rng)
    : conv1_(ps, name + ".conv1", hidden, hidden, kernel, rng),
      conv2_(ps, name + ".conv2", hidden, hidden, kernel, rng),
      ln1_(ps, name + ".ln1", hidden),
      ln2_(ps, name + ".ln2", hidden),
      out_(ps, name + ".out", hidden, 3, rng) {}

PitchRegressor::Output PitchRegressor::operator()(const Var& cond) const {
  Var h = ln1_(ag::relu(conv1_(cond)));
  h = ln2_(ag::relu(conv2_(h)));
  Var o = out_(h);
  return {ag::slice_cols(o, 0, 1), ag::slice_cols(o, 1, 2)};
}

ConvMelDecoder::ConvMelDecoder(nn::ParamSet& ps, const std::string& name,
                               int hidden, int kernel, Rng& rng)
    : out_(ps, name + ".out", hidden, dsp::kMelBins, rng) {
  for (int l = 0; l < 3; ++l)
    convs_.emplace_back(ps, name + ".conv" + std::to_string(l), hidden, hidden,
                        kernel, rng);
}

Var ConvMelDecoder::operator()(const Var& cond) const {
  Var h = cond;
  for (const auto& c : convs_) h = ag::add(h, ag::relu(c(h)));
  return ag::sigmoid(out_(h));
}

// --- model -------------------------------------------------------------------

namespace {

Tensor add_tensors(const Tensor& a, const Tensor& b) {
  Tensor c = a;
  c.mat() += b.mat();
  return c;
}

PitchTarget slice_target(const PitchTarget& t, int start, int len) {
  PitchTarget out{Tensor(len, 1),
                  std::vector<int>(t.uv.begin() + start, t.uv.begin() + start + len)};
  for (int f = 0; f < len; ++f) out.f0(f, 0) = t.f0(start + f, 0);
  return out;
}

Tensor slice_tensor(const Tensor& t, int start, int len) {
  Tensor out(len, t.cols());
  for (int r = 0; r < len; ++r)
    std::copy(t.row(start + r).begin(), t.row(start + r).end(), out.row(r).begin());
  return out;
}

// Cross-entropy of 2-way logits against voicing flags.
Var voicing_ce(const Var& logits, const std::vector<int>& uv) {
  return diffusion::multinomial_loss(diffusion::one_hot(uv, 2), logits,
                                     diffusion::one_hot(uv, 2), 1,
                                     diffusion::Schedule({0.5}));
}

}  // namespace

AcousticModel::AcousticModel(const ModelConfig& cfg_in,
                             std::shared_ptr<const StyleClassifier> classifier,
                             std::uint64_t seed)
    : cfg_(cfg_in), classifier_(std::move(classifier)) {
  cfg_.resolve();
  if (!classifier_) throw std::invalid_argument("model needs a style classifier");
  if (classifier_->encoder.config().embed_dim != cfg_.hidden)
    throw std::invalid_argument(
        "style classifier embedding width " +
        std::to_string(classifier_->encoder.config().embed_dim) +
        " does not match model width " + std::to_string(cfg_.hidden));
  Rng rng(seed);
  const int h = cfg_.hidden;
  phonemes_ = PhonemeEncoder(params_, "phoneme_encoder", cfg_.encoder, rng);
  notes_ = NoteEncoder(params_, "note_encoder", h, rng);
  duration_ = DurationPredictor(params_, "duration", h, cfg_.duration_kernel,
                                cfg_.encoder.dropout, rng);
  if (cfg_.use_umln) umln_ = Umln(params_, "umln", h, h, rng, cfg_.umln);
  if (cfg_.use_rsa) {
    reference_ = ConvStyleEncoder(params_, "rsa.reference", dsp::kMelBins,
                                  cfg_.rsa, rng);
    align_ = AlignAttention(params_, "rsa.align", h, cfg_.rsa.attn_layers,
                            cfg_.rsa.attn_heads, 4, rng);
    books_ = RqCodebooks(cfg_.rsa.rq_depth, cfg_.rsa.rq_codes, h, rng);
  }
  if (cfg_.use_pitch_diffusion) {
    pitch_ = PitchPredictor(params_, "pitch", cfg_.pitch, rng);
  } else {
    pitch_fallback_ = PitchRegressor(params_, "pitch_regressor", h,
                                     cfg_.fallback_kernel, rng);
  }
  pitch_proj_ = nn::Linear(params_, "pitch_projection", 2, h, rng);
  if (cfg_.use_diffusion_decoder) {
    decoder_ = MelDecoder(params_, "decoder", cfg_.decoder, rng);
  } else {
    decoder_fallback_ = ConvMelDecoder(params_, "conv_decoder", h,
                                       cfg_.fallback_kernel, rng);
  }
}

StyleVectors AcousticModel::style_of(const Tensor& mel) const {
  ag::NoGradGuard ng;
  auto e = classifier_->encoder(mel, {false, nullptr});
  return {e.timbre.value(), e.emotion.value()};
}

TrainExample AcousticModel::prepare(const SingingSample& s) const {
  TrainExample ex;
  ex.sample = &s;
  ex.phoneme_ids = phoneme_ids(s.score.phonemes);
  int total = 0;
  for (int d : s.phoneme_durations) total += d;
  if (total != s.frames())
    throw std::invalid_argument("sample " + s.id + ": durations sum to " +
                                std::to_string(total) + " frames, mel has " +
                                std::to_string(s.frames()));
  const PitchTarget absolute = make_pitch_target(s.f0, s.uv, stats_.pitch);
  if (cfg_.pitch_note_relative) {
    const auto base = note_log2_track(s.score, s.phoneme_durations);
    ex.pitch = make_pitch_target(s.f0, s.uv, stats_.pitch_relative, &base);
  } else {
    ex.pitch = absolute;
  }
  ex.pitch_features = pitch_features(absolute);
  ex.mel_norm = stats_.mel.normalize(s.mel);
  ex.style = style_of(s.mel);
  return ex;
}

Var AcousticModel::content(const TrainExample& ex, const nn::Context& ctx) const {
  return compose_content(phonemes_(ex.phoneme_ids, ctx), notes_(ex.sample->score));
}

AcousticModel::BatchResult AcousticModel::batch_loss(
    const std::vector<const TrainExample*>& batch, const LossWeights& w,
    int crop, Rng& rng) const {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  const nn::Context ctx{true, &rng};
  const int n = static_cast<int>(batch.size());
  BatchResult out;

  std::vector<Var> frames(n), styles(n);
  std::vector<int> starts(n), lengths(n);
  Var l_dur = ag::constant(Tensor::scalar(0.0));
  for (int b = 0; b < n; ++b) {
    const TrainExample& ex = *batch[b];
    Var c = content(ex, ctx);
    styles[b] = ag::constant(add_tensors(ex.style.timbre, ex.style.emotion));
    l_dur = ag::add(l_dur, duration_loss(duration_(c, styles[b], ctx),
                                         ex.sample->phoneme_durations));
    Var expanded = length_regulate(c, ex.sample->phoneme_durations);
    const int t = expanded.rows();
    lengths[b] = crop > 0 ? std::min(crop, t) : t;
    starts[b] = t > lengths[b] ? rng.randint(0, t - lengths[b]) : 0;
    frames[b] = lengths[b] == t ? expanded
                                : ag::slice_rows(expanded, starts[b], lengths[b]);
  }
  std::vector<Var> ec =
      cfg_.use_umln ? umln_(frames, ag::concat_rows(styles), ctx) : frames;

  Var l_g = ag::constant(Tensor::scalar(0.0)), l_m = l_g, l_c = l_g,
      l_mae = l_g, l_ssim = l_g;
  for (int b = 0; b < n; ++b) {
    const TrainExample& ex = *batch[b];
    const int s = starts[b], len = lengths[b];
    Var aligned;
    if (cfg_.use_rsa) {
      Var e = reference_(ag::constant(ex.mel_norm), ag::constant(ex.pitch_features));
      RqResult rq = rq_quantize(e.value(), books_);
      l_c = ag::add(l_c, ag::scale(commitment_loss(e, rq),
                                   1.0 / static_cast<double>(e.value().size())));
      aligned = align_(ec[b], straight_through(e, rq), s);
      out.rq_inputs.push_back(e.value());
      out.rq_results.push_back(std::move(rq));
    } else {
      aligned = ag::constant(Tensor(len, cfg_.hidden));
    }
    Var es = style_specific_rep(ec[b], aligned, ag::constant(ex.style.timbre),
                                ag::constant(ex.style.emotion));

    const PitchTarget target = slice_target(ex.pitch, s, len);
    if (cfg_.use_pitch_diffusion) {
      auto pl = pitch_.train_step(target, es, ec[b], rng);
      l_g = ag::add(l_g, pl.gdiff);
      l_m = ag::add(l_m, pl.mdiff);
    } else {
      auto po = pitch_fallback_(es);
      l_g = ag::add(l_g, ag::mean(ag::square(
                             ag::sub(po.f0, ag::constant(target.f0)))));
      l_m = ag::add(l_m, voicing_ce(po.logits, target.uv));
    }

    Var cond = ag::add(es, pitch_proj_(ag::constant(
                               slice_tensor(ex.pitch_features, s, len))));
    const Tensor mel = slice_tensor(ex.mel_norm, s, len);
    if (cfg_.use_diffusion_decoder) {
      auto dl = decoder_.train_step(mel, cond, rng);
      l_mae = ag::add(l_mae, dl.mae);
      l_ssim = ag::add(l_ssim, dl.ssim);
    } else {
      Var pred = decoder_fallback_(cond);
      Var gt = ag::constant(mel);
      l_mae = ag::add(l_mae, mae_loss(pred, gt));
      l_ssim = ag::add(l_ssim, ag::add_scalar(ag::scale(ssim(pred, gt), -1.0), 1.0));
    }
  }

  const double inv = 1.0 / n;
  Var terms[6] = {l_dur, l_g, l_m, l_c, l_mae, l_ssim};
  const double weights[6] = {w.dur, w.gdiff, w.mdiff, w.commit, w.mae, w.ssim};
  double* slots[6] = {&out.parts.dur,    &out.parts.gdiff, &out.parts.mdiff,
                      &out.parts.commit, &out.parts.mae,   &out.parts.ssim};
  Var total = ag::constant(Tensor::scalar(0.0));
  for (int i = 0; i < 6; ++i) {
    terms[i] = ag::scale(terms[i], inv);
    *slots[i] = terms[i].item();
    total = ag::add(total, ag::scale(terms[i], weights[i]));
  }
  out.total = total;
  out.parts.total = total.item();
  return out;
}

void AcousticModel::update_codebooks(const BatchResult& r, Rng& rng) {
  if (!cfg_.use_rsa || r.rq_inputs.empty()) return;
  codebook_update(books_, r.rq_inputs, r.rq_results, cfg_.rsa.ema_decay,
                  cfg_.rsa.stale_limit, rng);
}

AcousticModel::Synthesis AcousticModel::synthesize(
    const MusicalScore& target, const Tensor& ref_mel,
    const std::vector<double>& ref_f0, const std::vector<int>& ref_uv,
    std::uint64_t seed, const std::vector<int>* forced) const {
  target.validate();
  if (ref_mel.rows() != static_cast<int>(ref_f0.size()))
    throw std::invalid_argument("reference mel and F0 differ in length");
  if (ref_mel.rows() < kMinStyleFrames)
    throw std::invalid_argument("reference shorter than " +
                                std::to_string(kMinStyleFrames) + " frames");
  ag::NoGradGuard ng;
  Rng rng(seed);
  const nn::Context ctx{false, nullptr};
  const StyleVectors style = style_of(ref_mel);
  const Var style_row = ag::constant(add_tensors(style.timbre, style.emotion));
  const Var c = compose_content(phonemes_.encode(target.phonemes, ctx),
                                notes_(target));

  Synthesis out;
  if (forced) {
    if (forced->size() != target.phonemes.size())
      throw std::invalid_argument("duration count does not match phonemes");
    out.durations = *forced;
  } else {
    out.durations = durations_from_log(duration_(c, style_row, ctx).value());
    for (int& d : out.durations) d = std::max(d, 1);
  }
  Var ec = length_regulate(c, out.durations);
  const int frames = ec.rows();
  if (cfg_.use_umln) ec = umln_({ec}, style_row, ctx)[0];

  Var aligned;
  if (cfg_.use_rsa) {
    const PitchTarget ref_pitch = make_pitch_target(ref_f0, ref_uv, stats_.pitch);
    Var e = reference_(ag::constant(stats_.mel.normalize(ref_mel)),
                       ag::constant(pitch_features(ref_pitch)));
    RqResult rq = rq_quantize(e.value(), books_);
    aligned = align_(ec, ag::constant(rq.partial.back()));
  } else {
    aligned = ag::constant(Tensor(frames, cfg_.hidden));
  }
  Var es = style_specific_rep(ec, aligned, ag::constant(style.timbre),
                              ag::constant(style.emotion));

  PitchTarget pred;
  if (cfg_.use_pitch_diffusion) {
    pred = pitch_.infer(es, ec, rng);
  } else {
    auto po = pitch_fallback_(es);
    pred.f0 = po.f0.value();
    pred.uv.resize(frames);
    for (int f = 0; f < frames; ++f)
      pred.uv[f] = po.logits.value()(f, 1) > po.logits.value()(f, 0) ? 1 : 0;
  }
  std::vector<double> base;
  if (cfg_.pitch_note_relative) base = note_log2_track(target, out.durations);
  const PitchContour contour =
      cfg_.pitch_note_relative
          ? contour_from_normalized(pred.f0, pred.uv, stats_.pitch_relative, &base)
          : contour_from_normalized(pred.f0, pred.uv, stats_.pitch);
  out.f0 = contour.f0;
  out.uv = contour.uv;

  const Tensor features =
      pitch_features(make_pitch_target(contour.f0, contour.uv, stats_.pitch));
  Var cond = ag::add(es, pitch_proj_(ag::constant(features)));
  const Tensor mel_norm = cfg_.use_diffusion_decoder
                              ? decoder_.infer(cond, rng)
                              : decoder_fallback_(cond).value();
  out.mel = stats_.mel.denormalize(mel_norm);
  return out;
}

// --- persistence ---------------------------------------------------------------

void store_params(const nn::ParamSet& ps, Checkpoint& ck,
                  const std::string& prefix) {
  for (const auto& [name, var] : ps.entries()) ck.put(prefix + name, var.value());
}

void load_params(nn::ParamSet& ps, const Checkpoint& ck,
                 const std::string& prefix) {
  for (const auto& [name, var] : ps.entries()) {
    const Tensor& t = ck.tensor(prefix + name);
    if (!t.same_shape(var.value()))
      throw CheckpointError("block '" + prefix + name + "' has shape " +
                            t.shape_str() + ", expected " +
                            var.value().shape_str());
    var.mutable_value() = t;
  }
}

namespace {

void bind_style(ConfigTable& t, StyleEncoderConfig& c) {
  t.bind("style.hidden", c.hidden, "conv width");
  t.bind("style.embed_dim", c.embed_dim, "embedding width");
  t.bind("style.conv_layers", c.conv_layers, "strided conv layers");
  t.bind("style.transformer_layers", c.transformer_layers, "FFT blocks");
  t.bind("style.heads", c.heads, "attention heads");
  t.bind("style.filter", c.filter, "FFT filter width");
  t.bind("style.dropout", c.dropout, "dropout");
}

Tensor vec_tensor(const std::vector<int>& v) {
  Tensor t(static_cast<int>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = v[i];
  return t;
}

std::vector<int> tensor_vec(const Tensor& t) {
  std::vector<int> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = static_cast<int>(t[i]);
  return v;
}

Tensor betas_of(const diffusion::Schedule& s) {
  Tensor t(1, s.steps());
  for (int i = 1; i <= s.steps(); ++i) t(0, i - 1) = s.beta(i);
  return t;
}

}  // namespace

Checkpoint classifier_to_checkpoint(const StyleClassifier& clf) {
  Checkpoint ck;
  StyleEncoderConfig cfg = clf.encoder.config();
  ConfigTable t;
  bind_style(t, cfg);
  ck.put_text("classifier.config", t.dump());
  store_params(clf.params, ck, "classifier/");
  return ck;
}

std::shared_ptr<StyleClassifier> classifier_from_checkpoint(const Checkpoint& ck) {
  StyleEncoderConfig cfg;
  ConfigTable t;
  bind_style(t, cfg);
  try {
    t.parse(ck.text("classifier.config"), "classifier.config");
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("block 'classifier.config': ") + e.what());
  }
  auto clf = std::make_shared<StyleClassifier>(cfg, 0);
  load_params(clf->params, ck, "classifier/");
  return clf;
}

Checkpoint AcousticModel::to_checkpoint(long step) const {
  Checkpoint ck = classifier_to_checkpoint(*classifier_);
  ModelConfig cfg = cfg_;
  ConfigTable t;
  cfg.bind(t);
  ck.put_text("model.config", t.dump());
  store_params(params_, ck, "param/");
  for (int n = 0; n < books_.depth(); ++n) {
    const std::string d = std::to_string(n);
    ck.put("rq/codes/" + d, books_.codes[n]);
    ck.put("rq/count/" + d, books_.ema_count[n]);
    ck.put("rq/sum/" + d, books_.ema_sum[n]);
    ck.put("rq/stale/" + d, vec_tensor(books_.stale[n]));
  }
  if (books_.depth() > 0) ck.put("rq/initialized", vec_tensor(books_.initialized));
  ck.put("stats", Tensor::of({{stats_.pitch.mean, stats_.pitch.std,
                               stats_.mel.lo, stats_.mel.hi,
                               stats_.pitch_relative.mean,
                               stats_.pitch_relative.std}}));
  if (cfg_.use_pitch_diffusion) ck.put("schedule/pitch", betas_of(pitch_.schedule()));
  if (cfg_.use_diffusion_decoder)
    ck.put("schedule/decoder", betas_of(decoder_.schedule()));
  ck.put("train/step", Tensor::scalar(static_cast<double>(step)));
  return ck;
}

AcousticModel AcousticModel::from_checkpoint(const Checkpoint& ck) {
  ModelConfig cfg;
  ConfigTable t;
  cfg.bind(t);
  try {
    t.parse(ck.text("model.config"), "model.config");
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("block 'model.config': ") + e.what());
  }
  AcousticModel m(cfg, classifier_from_checkpoint(ck), 0);
  load_params(m.params_, ck, "param/");
  for (int n = 0; n < m.books_.depth(); ++n) {
    const std::string d = std::to_string(n);
    auto load = [&](const std::string& name, Tensor& dst) {
      const Tensor& src = ck.tensor(name);
      if (!src.same_shape(dst))
        throw CheckpointError("block '" + name + "' has shape " + src.shape_str());
      dst = src;
    };
    load("rq/codes/" + d, m.books_.codes[n]);
    load("rq/count/" + d, m.books_.ema_count[n]);
    load("rq/sum/" + d, m.books_.ema_sum[n]);
    Tensor stale = vec_tensor(m.books_.stale[n]);
    load("rq/stale/" + d, stale);
    m.books_.stale[n] = tensor_vec(stale);
  }
  if (m.books_.depth() > 0) {
    Tensor init = vec_tensor(m.books_.initialized);
    const Tensor& src = ck.tensor("rq/initialized");
    if (!src.same_shape(init)) throw CheckpointError("block 'rq/initialized' has wrong shape");
    m.books_.initialized = tensor_vec(src);
  }
  const Tensor& st = ck.tensor("stats");
  if (st.rows() != 1 || st.cols() != 6)
    throw CheckpointError("block 'stats' has shape " + st.shape_str());
  m.stats_ = {{st(0, 0), st(0, 1)}, {st(0, 2), st(0, 3)}, {st(0, 4), st(0, 5)}};
  auto check_schedule = [&](const std::string& name,
                            const diffusion::Schedule& s) {
    if (!(ck.tensor(name) == betas_of(s)))
      throw CheckpointError("block '" + name + "' does not match the config");
  };
  if (cfg.use_pitch_diffusion) check_schedule("schedule/pitch", m.pitch_.schedule());
  if (cfg.use_diffusion_decoder)
    check_schedule("schedule/decoder", m.decoder_.schedule());
  return m;
}

}  // namespace cantor
