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

#include "cantor/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "cantor/dsp.hpp"
#include "json.hpp"

namespace cantor {
namespace {

using nlohmann::json;
constexpr double kFps = static_cast<double>(dsp::kSampleRate) / dsp::kHop;
constexpr int kHarmonics = 8;

template <typename E, std::size_t N>
E enum_from(std::string_view s, const std::string_view (&names)[N],
            const char* what) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<E>(i);
  throw std::invalid_argument(std::string("unknown ") + what + ": " +
                              std::string(s));
}

constexpr std::string_view kNoteTypeNames[] = {"normal", "rest", "slur",
                                               "grace"};
constexpr std::string_view kRangeNames[] = {"tenor", "soprano", "bass", "alto"};
constexpr std::string_view kEmotionNames[] = {"happy", "sad"};

// First-formant centre per vowel, Hz.
double vowel_formant(std::string_view v) {
  if (v == "a") return 800.0;
  if (v == "e") return 550.0;
  if (v == "i") return 320.0;
  if (v == "o") return 480.0;
  if (v == "u") return 360.0;
  return 400.0;  // nasals and liquids
}

double db(double x) { return std::pow(10.0, x / 20.0); }

double harmonic_gain(const SingerFilter& sf, double hz, double f1,
                     double extra_tilt) {
  const double octaves = std::log2(std::max(hz, 1.0) / 200.0);
  double g = (sf.tilt_db_per_octave + extra_tilt) * octaves;
  const double dz = (hz - sf.formant_hz) / sf.formant_bandwidth_hz;
  g += sf.formant_gain_db * std::exp(-0.5 * dz * dz);
  const double d1 = (hz - f1) / 150.0;
  g += 8.0 * std::exp(-0.5 * d1 * d1);
  return db(g);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Note start frames, with one trailing entry holding the total.
std::vector<int> note_start_frames(const MusicalScore& score) {
  std::vector<int> starts(score.notes.size() + 1, 0);
  double t = 0.0;
  for (std::size_t i = 0; i < score.notes.size(); ++i) {
    t += score.notes[i].duration;
    starts[i + 1] = static_cast<int>(std::lround(t * kFps));
  }
  return starts;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Per-frame phoneme index, from phoneme_frames.
std::vector<int> frame_phonemes(const std::vector<int>& durations) {
  std::vector<int> out;
  for (std::size_t p = 0; p < durations.size(); ++p)
    out.insert(out.end(), durations[p], static_cast<int>(p));
  return out;
}

}  // namespace

std::string_view to_string(NoteType t) {
  return kNoteTypeNames[static_cast<int>(t)];
}
NoteType note_type_from_string(std::string_view s) {
  return enum_from<NoteType>(s, kNoteTypeNames, "note type");
}
std::string_view to_string(VocalRange r) {
  return kRangeNames[static_cast<int>(r)];
}
std::string_view to_string(Emotion e) {
  return kEmotionNames[static_cast<int>(e)];
}
VocalRange vocal_range_from_string(std::string_view s) {
  return enum_from<VocalRange>(s, kRangeNames, "vocal range");
}
Emotion emotion_from_string(std::string_view s) {
  return enum_from<Emotion>(s, kEmotionNames, "emotion");
}

// --- phonemes ---------------------------------------------------------------

PhonemeSet::PhonemeSet() {
  vowels_ = {"a", "e", "i", "o", "u"};
  consonants_ = {"m", "n", "l", "s", "sh", "h", "k", "t"};
  symbols_ = {"<pad>", std::string(kSilencePhoneme)};
  symbols_.insert(symbols_.end(), vowels_.begin(), vowels_.end());
  symbols_.insert(symbols_.end(), consonants_.begin(), consonants_.end());
}

const PhonemeSet& PhonemeSet::instance() {
  static const PhonemeSet set;
  return set;
}

int PhonemeSet::id(std::string_view symbol) const {
  for (int i = 1; i < size(); ++i)
    if (symbols_[i] == symbol) return i;
  throw std::invalid_argument("unknown phoneme: " + std::string(symbol));
}

bool PhonemeSet::is_vowel(std::string_view symbol) const {
  return std::find(vowels_.begin(), vowels_.end(), symbol) != vowels_.end();
}

bool PhonemeSet::is_voiced(std::string_view symbol) const {
  return is_vowel(symbol) || symbol == "m" || symbol == "n" || symbol == "l";
}

// --- score -------------------------------------------------------------------

void MusicalScore::validate() const {
  if (notes.empty()) throw std::invalid_argument("score has no notes");
  if (phonemes.size() != phoneme_to_note.size())
    throw std::invalid_argument("phonemes and phoneme_to_note differ in length");
  const auto& set = PhonemeSet::instance();
  std::vector<int> per_note(notes.size(), 0);
  int prev = 0;
  for (std::size_t i = 0; i < notes.size(); ++i) {
    if (!(notes[i].duration > 0.0))
      throw std::invalid_argument("note " + std::to_string(i) +
                                  " has non-positive duration");
    if (notes[i].pitch < 0 || notes[i].pitch > 127)
      throw std::invalid_argument("note " + std::to_string(i) +
                                  " pitch outside [0, 127]");
  }
  for (std::size_t p = 0; p < phonemes.size(); ++p) {
    set.id(phonemes[p]);
    const int n = phoneme_to_note[p];
    if (n < 0 || n >= static_cast<int>(notes.size()))
      throw std::invalid_argument("phoneme_to_note[" + std::to_string(p) +
                                  "] out of range");
    if (n < prev)
      throw std::invalid_argument("phoneme_to_note is not monotone");
    prev = n;
    ++per_note[n];
    const bool rest = notes[n].type == NoteType::kRest;
    if (rest != (phonemes[p] == kSilencePhoneme))
      throw std::invalid_argument(
          "rest notes must carry exactly the silence phoneme (phoneme " +
          std::to_string(p) + ")");
  }
  for (std::size_t i = 0; i < notes.size(); ++i)
    if (per_note[i] == 0)
      throw std::invalid_argument("note " + std::to_string(i) +
                                  " has no phoneme");
}

double MusicalScore::total_seconds() const {
  double t = 0.0;
  for (const auto& n : notes) t += n.duration;
  return t;
}

void SynthStyleParams::validate() const {
  if (vibrato_rate < 0.0 || vibrato_rate > 10.0)
    throw std::invalid_argument("vibrato_rate outside [0, 10]");
  if (vibrato_depth < 0.0 || vibrato_depth > 200.0)
    throw std::invalid_argument("vibrato_depth outside [0, 200]");
  if (transition_time < 0.0 || transition_time > 300.0)
    throw std::invalid_argument("transition_time outside [0, 300]");
}

std::vector<int> phoneme_frames(const MusicalScore& score) {
  const auto starts = note_start_frames(score);
  const auto& set = PhonemeSet::instance();
  std::vector<int> out(score.phonemes.size(), 0);
  std::size_t p = 0;
  for (std::size_t n = 0; n < score.notes.size(); ++n) {
    std::size_t first = p;
    while (p < score.phonemes.size() &&
           score.phoneme_to_note[p] == static_cast<int>(n))
      ++p;
    const int count = static_cast<int>(p - first);
    if (count == 0) continue;
    int frames = starts[n + 1] - starts[n];
    // Leading consonants get a short fixed share, the last phoneme the rest.
    const int cons = std::clamp(static_cast<int>(std::lround(0.05 * kFps)), 1,
                                std::max(1, frames / (2 * count)));
    for (std::size_t q = first; q + 1 < p; ++q) {
      const int d = set.is_vowel(score.phonemes[q]) ? frames / count : cons;
      out[q] = std::min(d, frames);
      frames -= out[q];
    }
    out[p - 1] = frames;
  }
  return out;
}

double analytic_midi(const MusicalScore& score, const SynthStyleParams& params,
                     double t) {
  const auto starts = note_start_frames(score);
  const int n = static_cast<int>(score.notes.size());
  const double frame = t * kFps;
  int i = 0;
  while (i + 1 < n && frame >= starts[i + 1]) ++i;
  if (score.notes[i].type == NoteType::kRest)
    return std::numeric_limits<double>::quiet_NaN();
  int first = i;
  while (first > 0 && score.notes[first - 1].type != NoteType::kRest) --first;
  int last = i;
  while (last + 1 < n && score.notes[last + 1].type != NoteType::kRest) ++last;

  const double tau = params.transition_time / 1000.0 / 8.0;
  double midi = score.notes[first].pitch;
  for (int k = first + 1; k <= last; ++k) {
    const double tk = starts[k] / kFps;
    const double jump = score.notes[k].pitch - score.notes[k - 1].pitch;
    if (tau <= 0.0)
      midi += t >= tk ? jump : 0.0;
    else
      midi += jump * logistic((t - tk) / tau);
  }
  if (score.notes[i].type != NoteType::kGrace) {
    const double onset = starts[i] / kFps;
    midi += params.vibrato_depth / 100.0 *
            std::sin(2.0 * std::numbers::pi * params.vibrato_rate * (t - onset));
  }
  return midi;
}

std::vector<double> render_waveform(const MusicalScore& score,
                                    const SynthStyleParams& params,
                                    std::uint64_t seed) {
  score.validate();
  params.validate();
  const auto durations = phoneme_frames(score);
  const auto per_frame = frame_phonemes(durations);
  const int frames = static_cast<int>(per_frame.size());
  if (frames < 2) throw std::invalid_argument("score shorter than two frames");
  const std::size_t length = static_cast<std::size_t>(frames - 1) * dsp::kHop;
  const auto& set = PhonemeSet::instance();
  const auto& sf = params.singer_filter;
  Rng rng(mix_seed(seed, 0xC0FFEE));

  // Per-sample phoneme with a short linear crossfade of the voicing gains.
  std::vector<double> wave(length, 0.0);
  std::vector<double> phase(kHarmonics, 0.0);
  const double fade = 0.004 * dsp::kSampleRate;
  double voiced_gain = 0.0, noise_gain = 0.0, prev_noise = 0.0;
  for (std::size_t s = 0; s < length; ++s) {
    const double t = static_cast<double>(s) / dsp::kSampleRate;
    const int f = std::min(frames - 1,
                           static_cast<int>(std::lround(t * kFps)));
    const std::string& ph = score.phonemes[per_frame[f]];
    const bool voiced = set.is_voiced(ph);
    const bool vowel = set.is_vowel(ph);
    const double want_v = voiced ? (vowel ? 1.0 : 0.45) : 0.0;
    const double want_n = (!voiced && ph != kSilencePhoneme) ? 1.0 : 0.0;
    voiced_gain += std::clamp(want_v - voiced_gain, -1.0 / fade, 1.0 / fade);
    noise_gain += std::clamp(want_n - noise_gain, -1.0 / fade, 1.0 / fade);

    double x = 0.0;
    const double midi = analytic_midi(score, params, t);
    if (voiced_gain > 0.0 && std::isfinite(midi)) {
      const double f0 = dsp::midi_to_hz(midi);
      const double f1 = vowel_formant(ph);
      const double extra_tilt = vowel ? 0.0 : -6.0;
      for (int h = 0; h < kHarmonics; ++h) {
        const double hz = f0 * (h + 1);
        phase[h] += 2.0 * std::numbers::pi * hz / dsp::kSampleRate;
        if (phase[h] > 2.0 * std::numbers::pi) phase[h] -= 2.0 * std::numbers::pi;
        if (hz >= dsp::kMelFmax) continue;
        x += harmonic_gain(sf, hz, f1, extra_tilt) * std::sin(phase[h]);
      }
      x *= sf.loudness * voiced_gain / kHarmonics;
    }
    // Fricative noise, first-differenced to tilt it upward.
    const double w = rng.normal();
    if (noise_gain > 0.0) x += 0.04 * sf.loudness * noise_gain * (w - prev_noise);
    prev_noise = w;
    wave[s] = x;
  }
  return wave;
}

SingingSample generate_sample(const MusicalScore& score,
                              const SynthStyleParams& params,
                              std::uint64_t seed) {
  score.validate();
  SingingSample out;
  out.score = score;
  out.params = params;
  out.phoneme_durations = phoneme_frames(score);
  const auto wave = render_waveform(score, params, seed);
  out.mel = dsp::extract_mel(wave);
  const auto per_frame = frame_phonemes(out.phoneme_durations);
  const int frames = out.mel.rows();
  if (static_cast<int>(per_frame.size()) != frames)
    throw std::logic_error("frame grid mismatch in generate_sample");
  const auto& set = PhonemeSet::instance();
  out.f0.assign(frames, 0.0);
  out.uv.assign(frames, 0);
  for (int f = 0; f < frames; ++f) {
    if (!set.is_voiced(score.phonemes[per_frame[f]])) continue;
    const double midi = analytic_midi(score, params, f / kFps);
    if (!std::isfinite(midi)) continue;
    out.f0[f] = dsp::midi_to_hz(midi);
    out.uv[f] = 1;
  }
  return out;
}

// --- corpus assembly ---------------------------------------------------------

SingerProfile singer_profile(int singer_id) {
  if (singer_id < 0 || singer_id >= kSingerCount)
    throw std::invalid_argument("singer id out of range: " +
                                std::to_string(singer_id));
  struct Row {
    VocalRange range;
    double center, tilt, formant, gain, loud, rate, depth, trans;
  };
  static constexpr Row kRows[kSingerCount] = {
      {VocalRange::kTenor, -3, -5.0, 2800, 7, 0.30, 5.6, 60, 90},
      {VocalRange::kTenor, -2, -7.0, 3300, 5, 0.26, 6.2, 45, 70},
      {VocalRange::kSoprano, 12, -4.0, 3600, 6, 0.28, 6.0, 80, 60},
      {VocalRange::kSoprano, 11, -5.5, 4200, 8, 0.25, 5.4, 95, 80},
      {VocalRange::kBass, -15, -8.0, 2400, 6, 0.34, 5.0, 40, 110},
      {VocalRange::kBass, -14, -6.5, 2600, 9, 0.31, 5.3, 50, 120},
      {VocalRange::kAlto, 5, -6.0, 3000, 6, 0.27, 5.8, 70, 80},
      {VocalRange::kAlto, 6, -4.5, 3500, 7, 0.29, 6.4, 60, 100},
  };
  const Row& r = kRows[singer_id];
  SingerProfile p;
  p.id = singer_id;
  p.range = r.range;
  p.base.base_range = r.center;
  p.base.singer_filter = {r.tilt, r.formant, 0.15 * r.formant, r.gain, r.loud};
  p.base.vibrato_rate = r.rate;
  p.base.vibrato_depth = r.depth;
  p.base.transition_time = r.trans;
  return p;
}

SynthStyleParams sample_style(const SingerProfile& singer, Emotion emotion,
                              Rng& rng) {
  SynthStyleParams p = singer.base;
  const bool happy = emotion == Emotion::kHappy;
  p.singer_filter.tilt_db_per_octave += (happy ? 1.5 : -1.5) +
                                        rng.uniform(-0.3, 0.3);
  p.singer_filter.loudness *= (happy ? 1.2 : 0.8) * rng.uniform(0.95, 1.05);
  p.vibrato_rate = std::clamp(
      p.vibrato_rate + (happy ? 0.8 : -0.8) + rng.uniform(-0.3, 0.3), 0.0, 10.0);
  p.vibrato_depth =
      std::clamp(p.vibrato_depth * (happy ? 0.9 : 1.2) + rng.uniform(-8.0, 8.0),
                 0.0, 200.0);
  p.transition_time = std::clamp(
      p.transition_time * (happy ? 0.7 : 1.4) + rng.uniform(-10.0, 10.0), 0.0,
      300.0);
  return p;
}

MusicalScore random_score(Rng& rng, double center_midi, double tempo_scale) {
  const auto& set = PhonemeSet::instance();
  const int count = rng.randint(3, 5);
  MusicalScore s;
  for (int i = 0; i < count; ++i) {
    Note n;
    const double u = rng.uniform();
    const bool prev_voiced = i > 0 && s.notes.back().type != NoteType::kRest;
    if (i > 0 && i + 1 < count && u < 0.1)
      n.type = NoteType::kRest;
    else if (prev_voiced && u < 0.22)
      n.type = NoteType::kSlur;
    else if (i + 1 < count && u < 0.3)
      n.type = NoteType::kGrace;
    n.pitch = static_cast<int>(std::lround(center_midi)) + rng.randint(-5, 5);
    switch (n.type) {
      case NoteType::kRest: n.duration = rng.uniform(0.08, 0.15); break;
      case NoteType::kSlur: n.duration = rng.uniform(0.12, 0.22); break;
      case NoteType::kGrace: n.duration = rng.uniform(0.06, 0.09); break;
      case NoteType::kNormal: n.duration = rng.uniform(0.16, 0.3); break;
    }
    if (n.type != NoteType::kGrace) n.duration *= tempo_scale;
    s.notes.push_back(n);
  }
  // Syllable vowels; a grace note sings the vowel of the syllable after it.
  std::vector<std::string> vowel(count);
  for (int i = count - 1; i >= 0; --i) {
    const auto& v = set.vowels();
    vowel[i] = v[rng.randint(0, static_cast<int>(v.size()) - 1)];
    if (s.notes[i].type == NoteType::kGrace && i + 1 < count &&
        s.notes[i + 1].type == NoteType::kNormal)
      vowel[i] = vowel[i + 1];
  }
  std::string last_vowel = vowel[0];
  for (int i = 0; i < count; ++i) {
    const auto type = s.notes[i].type;
    auto push = [&](const std::string& ph) {
      s.phonemes.push_back(ph);
      s.phoneme_to_note.push_back(i);
    };
    if (type == NoteType::kRest) {
      push(std::string(kSilencePhoneme));
      continue;
    }
    if (type == NoteType::kSlur) {
      push(last_vowel);
      continue;
    }
    if (type == NoteType::kNormal && rng.uniform() < 0.7) {
      const auto& c = set.consonants();
      push(c[rng.randint(0, static_cast<int>(c.size()) - 1)]);
    }
    push(vowel[i]);
    last_vowel = vowel[i];
  }
  return s;
}

std::vector<SingingSample> build_corpus(const CorpusSpec& spec) {
  std::vector<int> singers = spec.singers;
  if (singers.empty())
    for (int i = 0; i < kSingerCount; ++i) singers.push_back(i);
  std::vector<SingingSample> out;
  for (int singer : singers) {
    const SingerProfile prof = singer_profile(singer);
    for (Emotion emo : {Emotion::kHappy, Emotion::kSad}) {
      for (int k = 0; k < spec.samples_per_class; ++k) {
        const std::uint64_t seed = mix_seed(
            spec.seed, (static_cast<std::uint64_t>(singer) << 32) |
                           (static_cast<std::uint64_t>(emo) << 24) |
                           static_cast<std::uint64_t>(k));
        Rng rng(seed);
        SynthStyleParams params = sample_style(prof, emo, rng);
        const double tempo = emo == Emotion::kHappy ? 0.85 : 1.2;
        MusicalScore score =
            random_score(rng, 60.0 + params.base_range, tempo);
        SingingSample s = generate_sample(score, params, seed);
        s.singer_id = singer;
        s.style = {prof.range, emo};
        char id[64];
        std::snprintf(id, sizeof(id), "s%d_%s_%03d", singer,
                      std::string(to_string(emo)).c_str(), k);
        s.id = id;
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

bool is_out_of_domain(const SingingSample& s) {
  for (int h : kHeldOutSingers)
    if (s.singer_id == h) return true;
  const StyleClassLabel tenor_happy{VocalRange::kTenor, Emotion::kHappy};
  const StyleClassLabel alto_sad{VocalRange::kAlto, Emotion::kSad};
  return s.style == tenor_happy || s.style == alto_sad;
}

// --- IO ----------------------------------------------------------------------

void write_matrix_f32(const std::filesystem::path& path, const Tensor& m) {
  static_assert(std::endian::native == std::endian::little,
                "big-endian hosts are not supported");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << "F32LE " << m.rows() << ' ' << m.cols() << '\n';
  std::vector<float> buf(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) buf[i] = static_cast<float>(m[i]);
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!os) throw IoError("short write to " + path.string());
}

Tensor read_matrix_f32(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::string header;
  std::getline(is, header);
  std::istringstream hs(header);
  std::string magic;
  long rows = -1, cols = -1;
  hs >> magic >> rows >> cols;
  if (magic != "F32LE" || rows < 0 || cols < 0)
    throw IoError("bad matrix header in " + path.string());
  std::vector<float> buf(static_cast<std::size_t>(rows * cols));
  is.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (is.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
    throw IoError("truncated matrix file " + path.string());
  Tensor t(static_cast<int>(rows), static_cast<int>(cols));
  for (std::size_t i = 0; i < buf.size(); ++i) t[i] = buf[i];
  return t;
}

namespace {

json score_json(const MusicalScore& score) {
  json notes = json::array();
  for (const auto& n : score.notes)
    notes.push_back({{"pitch", n.pitch},
                     {"note_type", std::string(to_string(n.type))},
                     {"duration", n.duration}});
  return {{"format", "score_v1"},
          {"notes", notes},
          {"phonemes", score.phonemes},
          {"phoneme_to_note", score.phoneme_to_note}};
}

MusicalScore score_from(const json& j) {
  if (j.value("format", "") != "score_v1")
    throw std::invalid_argument("score format must be \"score_v1\"");
  MusicalScore s;
  for (const auto& n : j.at("notes"))
    s.notes.push_back({n.at("pitch").get<int>(),
                       note_type_from_string(n.at("note_type").get<std::string>()),
                       n.at("duration").get<double>()});
  s.phonemes = j.at("phonemes").get<std::vector<std::string>>();
  s.phoneme_to_note = j.at("phoneme_to_note").get<std::vector<int>>();
  s.validate();
  return s;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

std::string score_to_json(const MusicalScore& score) {
  return score_json(score).dump(2);
}

MusicalScore score_from_json(const std::string& text) {
  try {
    return score_from(json::parse(text));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed score: ") + e.what());
  }
}

MusicalScore read_score_file(const std::filesystem::path& path) {
  return score_from_json(read_text(path));
}

void write_score_file(const std::filesystem::path& path,
                      const MusicalScore& score) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << score_to_json(score) << '\n';
}

void write_sample(const std::filesystem::path& corpus_dir,
                  const SingingSample& s) {
  const auto dir = corpus_dir / std::to_string(s.singer_id);
  std::filesystem::create_directories(dir);
  const auto& p = s.params;
  json meta = {
      {"format", "sample_v1"},
      {"id", s.id},
      {"singer_id", s.singer_id},
      {"vocal_range", std::string(to_string(s.style.range))},
      {"emotion", std::string(to_string(s.style.emotion))},
      {"frames", s.frames()},
      {"phoneme_durations", s.phoneme_durations},
      {"params",
       {{"vibrato_rate", p.vibrato_rate},
        {"vibrato_depth", p.vibrato_depth},
        {"transition_time", p.transition_time},
        {"base_range", p.base_range},
        {"tilt_db_per_octave", p.singer_filter.tilt_db_per_octave},
        {"formant_hz", p.singer_filter.formant_hz},
        {"formant_bandwidth_hz", p.singer_filter.formant_bandwidth_hz},
        {"formant_gain_db", p.singer_filter.formant_gain_db},
        {"loudness", p.singer_filter.loudness}}},
      {"score", score_json(s.score)}};
  std::ofstream os(dir / (s.id + ".json"));
  if (!os) throw IoError("cannot write sample " + s.id);
  os << meta.dump(1) << '\n';
  write_matrix_f32(dir / (s.id + ".mel.bin"), s.mel);
  Tensor pitch(s.frames(), 2);
  for (int f = 0; f < s.frames(); ++f) {
    pitch(f, 0) = s.f0[f];
    pitch(f, 1) = s.uv[f];
  }
  write_matrix_f32(dir / (s.id + ".pitch.bin"), pitch);
}

SingingSample read_sample(const std::filesystem::path& json_path) {
  json j;
  try {
    j = json::parse(read_text(json_path));
  } catch (const json::exception& e) {
    throw IoError("malformed sample " + json_path.string() + ": " + e.what());
  }
  SingingSample s;
  s.id = j.at("id").get<std::string>();
  s.singer_id = j.at("singer_id").get<int>();
  s.style = {vocal_range_from_string(j.at("vocal_range").get<std::string>()),
             emotion_from_string(j.at("emotion").get<std::string>())};
  s.phoneme_durations = j.at("phoneme_durations").get<std::vector<int>>();
  const auto& p = j.at("params");
  s.params.vibrato_rate = p.at("vibrato_rate");
  s.params.vibrato_depth = p.at("vibrato_depth");
  s.params.transition_time = p.at("transition_time");
  s.params.base_range = p.at("base_range");
  s.params.singer_filter = {p.at("tilt_db_per_octave"), p.at("formant_hz"),
                            p.at("formant_bandwidth_hz"),
                            p.at("formant_gain_db"), p.at("loudness")};
  s.score = score_from(j.at("score"));

  auto base = json_path;
  base.replace_extension();
  const std::string stem = base.string();
  s.mel = read_matrix_f32(stem + ".mel.bin");
  const Tensor pitch = read_matrix_f32(stem + ".pitch.bin");
  if (pitch.rows() != s.mel.rows() || pitch.cols() != 2 ||
      s.mel.cols() != dsp::kMelBins)
    throw IoError("inconsistent shapes for sample " + s.id);
  for (int f = 0; f < pitch.rows(); ++f) {
    s.uv.push_back(pitch(f, 1) > 0.5 ? 1 : 0);
    s.f0.push_back(s.uv.back() ? pitch(f, 0) : 0.0);
  }
  return s;
}

void write_corpus(const std::filesystem::path& dir,
                  const std::vector<SingingSample>& samples) {
  for (const auto& s : samples) write_sample(dir, s);
}

std::vector<SingingSample> read_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("corpus directory not found: " + dir.string());
  std::map<std::pair<int, std::string>, std::filesystem::path> found;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".json") continue;
    int singer = 0;
    try {
      singer = std::stoi(e.path().parent_path().filename().string());
    } catch (const std::exception&) {
      continue;
    }
    found[{singer, e.path().stem().string()}] = e.path();
  }
  std::vector<SingingSample> out;
  for (const auto& [key, path] : found) out.push_back(read_sample(path));
  return out;
}

}  // namespace cantor
