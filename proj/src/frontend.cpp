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

#include "cantor/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cantor {

std::vector<int> phoneme_ids(const std::vector<std::string>& phonemes) {
  const auto& set = PhonemeSet::instance();
  std::vector<int> ids;
  ids.reserve(phonemes.size());
  for (const auto& p : phonemes) ids.push_back(set.id(p));
  return ids;
}

PhonemeEncoder::PhonemeEncoder(nn::ParamSet& ps, const std::string& name,
                               const EncoderConfig& cfg, Rng& rng)
    : embed_(ps, name + ".embed", PhonemeSet::instance().size(), cfg.hidden,
             rng),
      hidden_(cfg.hidden) {
  for (int l = 0; l < cfg.layers; ++l)
    blocks_.emplace_back(ps, name + ".fft" + std::to_string(l), cfg.hidden,
                         cfg.filter, cfg.kernel, cfg.heads, cfg.dropout, rng);
}

Var PhonemeEncoder::operator()(const std::vector<int>& ids,
                               const nn::Context& ctx) const {
  if (ids.empty()) throw std::invalid_argument("empty phoneme sequence");
  const int valid = static_cast<int>(
      std::find(ids.begin(), ids.end(), 0) - ids.begin());
  if (valid == 0) throw std::invalid_argument("phoneme sequence is all padding");
  Var x = embed_(ids);
  x = ag::add(x, ag::constant(nn::sinusoidal_positions(
                     static_cast<int>(ids.size()), hidden_)));
  x = nn::mask_rows(x, valid);
  for (const auto& b : blocks_) x = b(x, valid, ctx);
  return x;
}

Var PhonemeEncoder::encode(const std::vector<std::string>& phonemes,
                           const nn::Context& ctx) const {
  return (*this)(phoneme_ids(phonemes), ctx);
}

NoteEncoder::NoteEncoder(nn::ParamSet& ps, const std::string& name, int hidden,
                         Rng& rng)
    : pitch_(ps, name + ".pitch", 128, hidden, rng),
      type_(ps, name + ".type", kNoteTypeCount, hidden, rng),
      duration_(ps, name + ".duration", 1, hidden, rng) {}

Var NoteEncoder::operator()(const MusicalScore& score) const {
  const std::size_t n = score.phoneme_to_note.size();
  if (n == 0) throw std::invalid_argument("score has no phonemes");
  std::vector<int> pitch(n), type(n);
  Tensor dur(static_cast<int>(n), 1);
  for (std::size_t p = 0; p < n; ++p) {
    const int idx = score.phoneme_to_note[p];
    if (idx < 0 || idx >= static_cast<int>(score.notes.size()))
      throw std::invalid_argument("phoneme_to_note out of range");
    const Note& note = score.notes[idx];
    if (note.pitch < 0 || note.pitch > 127)
      throw std::invalid_argument("MIDI pitch outside [0, 127]: " +
                                  std::to_string(note.pitch));
    pitch[p] = note.pitch;
    type[p] = static_cast<int>(note.type);
    dur(static_cast<int>(p), 0) = note.duration;
  }
  return ag::add(ag::add(pitch_(pitch), type_(type)),
                 duration_(ag::constant(std::move(dur))));
}

Var compose_content(const Var& phoneme_features, const Var& note_features) {
  if (phoneme_features.rows() != note_features.rows() ||
      phoneme_features.cols() != note_features.cols())
    throw std::invalid_argument("content length mismatch: " +
                                phoneme_features.value().shape_str() + " vs " +
                                note_features.value().shape_str());
  return ag::add(phoneme_features, note_features);
}

DurationPredictor::DurationPredictor(nn::ParamSet& ps, const std::string& name,
                                     int hidden, int kernel, double dropout,
                                     Rng& rng)
    : conv1_(ps, name + ".conv1", hidden, hidden, kernel, rng),
      conv2_(ps, name + ".conv2", hidden, hidden, kernel, rng),
      ln1_(ps, name + ".ln1", hidden),
      ln2_(ps, name + ".ln2", hidden),
      out_(ps, name + ".out", hidden, 1, rng),
      dropout_(dropout) {}

Var DurationPredictor::operator()(const Var& content, const Var& style,
                                  const nn::Context& ctx) const {
  Var h = ag::add_row(content, style);
  h = ln1_(ag::relu(conv1_(h)));
  if (ctx.training) h = ag::dropout(h, dropout_, *ctx.rng);
  h = ln2_(ag::relu(conv2_(h)));
  if (ctx.training) h = ag::dropout(h, dropout_, *ctx.rng);
  return out_(h);
}

Var duration_loss(const Var& log_pred, const std::vector<int>& frames) {
  if (log_pred.rows() != static_cast<int>(frames.size()) || log_pred.cols() != 1)
    throw std::invalid_argument("duration prediction shape mismatch");
  Tensor target(log_pred.rows(), 1);
  for (std::size_t i = 0; i < frames.size(); ++i)
    target(static_cast<int>(i), 0) = std::log(frames[i] + 1.0);
  return ag::mean(ag::square(ag::sub(log_pred, ag::constant(std::move(target)))));
}

std::vector<int> durations_from_log(const Tensor& log_pred) {
  std::vector<int> out(log_pred.size());
  for (std::size_t i = 0; i < log_pred.size(); ++i) {
    const double d = std::exp(std::min(log_pred[i], 20.0)) - 1.0;
    out[i] = std::max(0, static_cast<int>(std::lround(d)));
  }
  return out;
}

Var length_regulate(const Var& x, const std::vector<int>& durations) {
  if (x.rows() != static_cast<int>(durations.size()))
    throw std::invalid_argument("length_regulate: duration count mismatch");
  std::vector<int> index;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (durations[i] < 0)
      throw std::invalid_argument("length_regulate: negative duration");
    index.insert(index.end(), durations[i], static_cast<int>(i));
  }
  if (index.empty())
    throw std::invalid_argument("length_regulate: all durations are zero");
  return ag::gather_rows(x, index);
}

}  // namespace cantor
