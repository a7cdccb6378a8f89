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

// Synthetic singing corpus: scores, style parameters, a harmonic-stack
// singer model, and on-disk layout.

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cantor/rng.hpp"
#include "cantor/tensor.hpp"

namespace cantor {

/// File-system failure while reading or writing corpus files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NoteType { kNormal = 0, kRest = 1, kSlur = 2, kGrace = 3 };
inline constexpr int kNoteTypeCount = 4;
std::string_view to_string(NoteType t);
NoteType note_type_from_string(std::string_view s);

struct Note {
  int pitch = 60;  // MIDI semitone
  NoteType type = NoteType::kNormal;
  double duration = 0.25;  // seconds
};

/// Silence phoneme carried by rest notes.
inline constexpr std::string_view kSilencePhoneme = "SP";

struct MusicalScore {
  std::vector<Note> notes;
  std::vector<std::string> phonemes;
  std::vector<int> phoneme_to_note;

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const;
  double total_seconds() const;
};

/// Phoneme inventory. Id 0 is padding; ids are stable across versions.
class PhonemeSet {
 public:
  static const PhonemeSet& instance();
  int size() const { return static_cast<int>(symbols_.size()); }
  /// Throws std::invalid_argument("unknown phoneme: <sym>").
  int id(std::string_view symbol) const;
  const std::string& symbol(int id) const { return symbols_.at(id); }
  bool is_vowel(std::string_view symbol) const;
  bool is_voiced(std::string_view symbol) const;
  const std::vector<std::string>& vowels() const { return vowels_; }
  const std::vector<std::string>& consonants() const { return consonants_; }

 private:
  PhonemeSet();
  std::vector<std::string> symbols_;
  std::vector<std::string> vowels_, consonants_;
};

enum class VocalRange { kTenor = 0, kSoprano = 1, kBass = 2, kAlto = 3 };
enum class Emotion { kHappy = 0, kSad = 1 };
std::string_view to_string(VocalRange r);
std::string_view to_string(Emotion e);
VocalRange vocal_range_from_string(std::string_view s);
Emotion emotion_from_string(std::string_view s);

struct StyleClassLabel {
  VocalRange range = VocalRange::kTenor;
  Emotion emotion = Emotion::kHappy;
  /// 0..7, range-major.
  int index() const { return static_cast<int>(range) * 2 + static_cast<int>(emotion); }
  bool operator==(const StyleClassLabel&) const = default;
};

struct SingerFilter {
  double tilt_db_per_octave = -6.0;  // relative to 200 Hz
  double formant_hz = 3000.0;
  double formant_bandwidth_hz = 500.0;
  double formant_gain_db = 6.0;
  double loudness = 0.3;  // peak harmonic amplitude
};

struct SynthStyleParams {
  double vibrato_rate = 5.5;     // Hz, [0, 10]
  double vibrato_depth = 50.0;   // cents (peak deviation), [0, 200]
  double transition_time = 80.0; // ms, [0, 300]
  SingerFilter singer_filter;
  /// Register centre used when composing scores for this style, as a
  /// semitone offset from MIDI 60. Rendering never transposes notes.
  double base_range = 0.0;

  void validate() const;
};

struct SingingSample {
  std::string id;
  MusicalScore score;
  Tensor mel;                 // frames x 80
  std::vector<double> f0;     // Hz, 0 where unvoiced
  std::vector<int> uv;        // 1 voiced
  std::vector<int> phoneme_durations;  // frames per phoneme
  int singer_id = 0;
  StyleClassLabel style;
  SynthStyleParams params;

  int frames() const { return mel.rows(); }
};

/// Phoneme durations in frames from the score timing. Note boundaries are
/// rounded on the frame grid, so the sum is round(total_seconds * fps).
std::vector<int> phoneme_frames(const MusicalScore& score);

/// Analytic contour in MIDI units at time t (seconds), or NaN when t falls
/// in a rest. Vibrato restarts at each sustained note onset; neighbouring
/// voiced notes are joined by logistic glides spanning transition_time.
double analytic_midi(const MusicalScore& score, const SynthStyleParams& params,
                     double t);

/// Renders the waveform at 48 kHz. Length is (frames - 1) * hop so that
/// extract_mel yields exactly the score's frame count.
std::vector<double> render_waveform(const MusicalScore& score,
                                    const SynthStyleParams& params,
                                    std::uint64_t seed);

/// Deterministic in (score, params, seed). Throws on an empty score.
SingingSample generate_sample(const MusicalScore& score,
                              const SynthStyleParams& params,
                              std::uint64_t seed);

// --- corpus assembly -------------------------------------------------------

inline constexpr int kSingerCount = 8;

/// Fixed per-singer voice: vocal range, timbre and default articulation.
struct SingerProfile {
  int id = 0;
  VocalRange range = VocalRange::kTenor;
  SynthStyleParams base;
};
SingerProfile singer_profile(int singer_id);

/// Style parameters for one sample: singer voice, emotion shift, jitter.
SynthStyleParams sample_style(const SingerProfile& singer, Emotion emotion,
                              Rng& rng);

/// Random 3-5 note phrase around the register centre.
MusicalScore random_score(Rng& rng, double center_midi, double tempo_scale);

struct CorpusSpec {
  int samples_per_class = 20;  // per (singer, emotion)
  std::uint64_t seed = 1234;
  std::vector<int> singers;  // empty = all
};

std::vector<SingingSample> build_corpus(const CorpusSpec& spec);

/// Held-out design: two singers plus the tenor-happy and alto-sad classes.
bool is_out_of_domain(const SingingSample& s);
inline constexpr int kHeldOutSingers[2] = {3, 4};

// --- on-disk layout --------------------------------------------------------
// corpus/<singer_id>/<sample_id>.json       score + metadata
// corpus/<singer_id>/<sample_id>.mel.bin    frames x 80
// corpus/<singer_id>/<sample_id>.pitch.bin  frames x 2 (f0 Hz, uv)
// Binary files: ASCII header line "F32LE <rows> <cols>\n", then row-major
// little-endian float32 values.

void write_matrix_f32(const std::filesystem::path& path, const Tensor& m);
Tensor read_matrix_f32(const std::filesystem::path& path);

std::string score_to_json(const MusicalScore& score);  // "score_v1"
MusicalScore score_from_json(const std::string& text);
MusicalScore read_score_file(const std::filesystem::path& path);
void write_score_file(const std::filesystem::path& path,
                      const MusicalScore& score);

void write_sample(const std::filesystem::path& corpus_dir,
                  const SingingSample& s);
SingingSample read_sample(const std::filesystem::path& json_path);
void write_corpus(const std::filesystem::path& dir,
                  const std::vector<SingingSample>& samples);
/// Loads every sample under dir in (singer, sample id) order.
std::vector<SingingSample> read_corpus(const std::filesystem::path& dir);

}  // namespace cantor
