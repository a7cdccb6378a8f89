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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <numeric>

#include "cantor/corpus.hpp"
#include "cantor/dsp.hpp"

namespace cantor {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> tone(double hz, std::size_t n, double amp = 1.0) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = amp * std::sin(2.0 * kPi * hz * i / dsp::kSampleRate);
  return w;
}

MusicalScore single_note(int pitch, double seconds) {
  MusicalScore s;
  s.notes = {{pitch, NoteType::kNormal, seconds}};
  s.phonemes = {"a"};
  s.phoneme_to_note = {0};
  return s;
}

SynthStyleParams flat_params() {
  SynthStyleParams p;
  p.vibrato_depth = 0.0;
  p.vibrato_rate = 0.0;
  return p;
}

TEST(Dsp, SilenceSitsAtLogFloor) {
  std::vector<double> zeros(4000, 0.0);
  Tensor mel = dsp::extract_mel(zeros);
  for (std::size_t i = 0; i < mel.size(); ++i)
    EXPECT_DOUBLE_EQ(mel[i], dsp::log_floor());
  auto pt = dsp::extract_f0(zeros);
  EXPECT_EQ(std::accumulate(pt.uv.begin(), pt.uv.end(), 0), 0);
}

TEST(Dsp, FrameCountFollowsHop) {
  std::vector<double> w(25600, 0.0);
  EXPECT_EQ(dsp::extract_mel(w).rows(), 101);
  EXPECT_EQ(dsp::extract_mel(w).cols(), 80);
  EXPECT_EQ(dsp::extract_f0(w).uv.size(), 101u);
}

TEST(Dsp, RejectsWrongSampleRate) {
  std::vector<double> w(1000, 0.0);
  EXPECT_THROW(dsp::extract_mel(w, 44100), std::invalid_argument);
  EXPECT_THROW(dsp::extract_f0(w, 16000), std::invalid_argument);
}

TEST(Dsp, PureToneArgmaxIsFilterContaining440) {
  // Oracle: the filter whose triangular response at 440 Hz is largest,
  // evaluated from the closed-form HTK centre frequencies.
  auto mel_of = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  const double lo = mel_of(20.0), hi = mel_of(16000.0);
  int expect = -1;
  double best = -1.0;
  for (int m = 0; m < 80; ++m) {
    auto c = [&](int i) {
      const double mm = lo + (hi - lo) * i / 81.0;
      return 700.0 * (std::pow(10.0, mm / 2595.0) - 1.0);
    };
    const double l = c(m), ctr = c(m + 1), r = c(m + 2);
    double resp = 0.0;
    if (440.0 > l && 440.0 < r)
      resp = 440.0 <= ctr ? (440.0 - l) / (ctr - l) : (r - 440.0) / (r - ctr);
    if (resp > best) best = resp, expect = m;
  }
  Tensor mel = dsp::extract_mel(tone(440.0, 48000));
  for (int f = 4; f < mel.rows() - 4; ++f) {
    int arg = 0;
    for (int b = 1; b < 80; ++b)
      if (mel(f, b) > mel(f, arg)) arg = b;
    EXPECT_EQ(arg, expect) << "frame " << f;
  }
}

TEST(Dsp, TrackerFindsPureToneFrequency) {
  auto pt = dsp::extract_f0(tone(220.0, 48000));
  int voiced = 0;
  for (std::size_t f = 0; f < pt.f0.size(); ++f) {
    if (!pt.uv[f]) continue;
    ++voiced;
    EXPECT_LT(std::abs(pt.f0[f] - 220.0), 1.0) << "frame " << f;
  }
  EXPECT_GT(voiced, static_cast<int>(pt.f0.size()) * 9 / 10);
}

TEST(Dsp, NoOctaveErrorOnLowTone) {
  auto pt = dsp::extract_f0(tone(110.0, 48000));
  for (std::size_t f = 0; f < pt.f0.size(); ++f) {
    if (!pt.uv[f]) continue;
    EXPECT_GT(std::abs(pt.f0[f] - 220.0), 20.0) << "frame " << f;
    EXPECT_LT(std::abs(pt.f0[f] - 110.0), 1.0) << "frame " << f;
  }
}

TEST(Dsp, NoiseIsMostlyUnvoiced) {
  Rng rng(3);
  std::vector<double> w(24000);
  for (auto& x : w) x = 0.1 * rng.normal();
  auto pt = dsp::extract_f0(w);
  const int voiced = std::accumulate(pt.uv.begin(), pt.uv.end(), 0);
  EXPECT_LT(voiced, static_cast<int>(pt.uv.size()) / 10);
}

TEST(Corpus, FlatNoteHoldsConcertA) {
  SingingSample s = generate_sample(single_note(69, 1.0), flat_params(), 7);
  int voiced = 0;
  for (int f = 0; f < s.frames(); ++f) {
    if (!s.uv[f]) continue;
    ++voiced;
    EXPECT_NEAR(s.f0[f], 440.0, 1e-9);
  }
  EXPECT_EQ(voiced, s.frames());
}

TEST(Corpus, GenerationIsDeterministic) {
  Rng rng(11);
  MusicalScore score = random_score(rng, 60.0, 1.0);
  SynthStyleParams p;
  SingingSample a = generate_sample(score, p, 5), b = generate_sample(score, p, 5);
  EXPECT_EQ(a.mel, b.mel);
  EXPECT_EQ(a.f0, b.f0);
  EXPECT_EQ(a.uv, b.uv);
  EXPECT_EQ(render_waveform(score, p, 5), render_waveform(score, p, 5));
}

TEST(Corpus, VibratoExtremesMatchClosedForm) {
  SynthStyleParams p = flat_params();
  p.vibrato_rate = 5.0;
  p.vibrato_depth = 100.0;
  SingingSample s = generate_sample(single_note(69, 1.0), p, 1);
  const auto [lo, hi] = std::minmax_element(s.f0.begin(), s.f0.end());
  const double want_hi = 440.0 * std::pow(2.0, 100.0 / 1200.0);
  const double want_lo = 440.0 * std::pow(2.0, -100.0 / 1200.0);
  EXPECT_NEAR(*hi / want_hi, 1.0, 0.01);
  EXPECT_NEAR(*lo / want_lo, 1.0, 0.01);
}

TEST(Corpus, RejectsEmptyAndMalformedScores) {
  MusicalScore empty;
  EXPECT_THROW(generate_sample(empty, SynthStyleParams{}, 0),
               std::invalid_argument);
  MusicalScore bad_rest = single_note(60, 0.5);
  bad_rest.notes[0].type = NoteType::kRest;
  EXPECT_THROW(bad_rest.validate(), std::invalid_argument);
  MusicalScore bad_idx = single_note(60, 0.5);
  bad_idx.phoneme_to_note = {3};
  EXPECT_THROW(bad_idx.validate(), std::invalid_argument);
  MusicalScore bad_dur = single_note(60, 0.0);
  EXPECT_THROW(bad_dur.validate(), std::invalid_argument);
  SynthStyleParams p;
  p.vibrato_rate = 11.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Corpus, SampleInvariantsHoldOnRandomScores) {
  Rng rng(42);
  for (int i = 0; i < 100; ++i) {
    const int singer = i % kSingerCount;
    SynthStyleParams p = sample_style(singer_profile(singer),
                                      i % 2 ? Emotion::kSad : Emotion::kHappy, rng);
    MusicalScore score = random_score(rng, 60.0 + p.base_range, 1.0);
    ASSERT_NO_THROW(score.validate());
    SingingSample s = generate_sample(score, p, rng.next_u64());
    ASSERT_EQ(s.mel.cols(), 80);
    ASSERT_EQ(static_cast<int>(s.f0.size()), s.frames());
    ASSERT_EQ(static_cast<int>(s.uv.size()), s.frames());
    ASSERT_EQ(std::accumulate(s.phoneme_durations.begin(),
                              s.phoneme_durations.end(), 0),
              s.frames());
    ASSERT_TRUE(s.mel.all_finite());
    for (int f = 0; f < s.frames(); ++f)
      ASSERT_EQ(s.uv[f] == 0, s.f0[f] == 0.0) << "frame " << f;
    // Rest frames are unvoiced.
    int f = 0;
    for (std::size_t ph = 0; ph < s.score.phonemes.size(); ++ph) {
      for (int k = 0; k < s.phoneme_durations[ph]; ++k, ++f)
        if (s.score.phonemes[ph] == kSilencePhoneme) ASSERT_EQ(s.uv[f], 0);
    }
  }
}

TEST(Corpus, TrackerRecoversAnalyticContour) {
  Rng rng(5);
  std::vector<double> cents;
  for (int i = 0; i < 8; ++i) {
    SynthStyleParams p = sample_style(singer_profile(i), Emotion::kHappy, rng);
    MusicalScore score = random_score(rng, 60.0 + p.base_range, 1.0);
    const auto wave = render_waveform(score, p, 9);
    SingingSample s = generate_sample(score, p, 9);
    auto pt = dsp::extract_f0(wave);
    ASSERT_EQ(pt.f0.size(), s.f0.size());
    for (std::size_t f = 0; f < pt.f0.size(); ++f)
      if (pt.uv[f] && s.uv[f])
        cents.push_back(std::abs(1200.0 * std::log2(pt.f0[f] / s.f0[f])));
  }
  ASSERT_GT(cents.size(), 200u);
  std::nth_element(cents.begin(), cents.begin() + cents.size() / 2, cents.end());
  EXPECT_LT(cents[cents.size() / 2], 5.0);
}

// Dominant frequency of the detrended contour via a direct DFT scan.
double dominant_rate(const std::vector<double>& f0) {
  std::vector<double> x;
  for (double v : f0) x.push_back(1200.0 * std::log2(v / 440.0));
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  for (auto& v : x) v -= mean;
  const double fps = static_cast<double>(dsp::kSampleRate) / dsp::kHop;
  double best = 0.0, best_hz = 0.0;
  for (double hz = 1.0; hz <= 10.0; hz += 0.01) {
    std::complex<double> acc = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n)
      acc += x[n] * std::polar(1.0, -2.0 * kPi * hz * n / fps);
    if (std::abs(acc) > best) best = std::abs(acc), best_hz = hz;
  }
  return best_hz;
}

TEST(Corpus, VibratoRateShowsInContourSpectrum) {
  for (double rate : {4.0, 7.0}) {
    SynthStyleParams p = flat_params();
    p.vibrato_rate = rate;
    p.vibrato_depth = 60.0;
    SingingSample s = generate_sample(single_note(69, 2.0), p, 3);
    EXPECT_NEAR(dominant_rate(s.f0), rate, 0.5);
  }
}

TEST(Corpus, GraceNoteTakesNextVowelAndRestsCarrySilence) {
  Rng rng(17);
  int graces = 0;
  for (int i = 0; i < 200; ++i) {
    MusicalScore s = random_score(rng, 60.0, 1.0);
    for (std::size_t n = 0; n + 1 < s.notes.size(); ++n) {
      if (s.notes[n].type != NoteType::kGrace ||
          s.notes[n + 1].type != NoteType::kNormal)
        continue;
      std::string g, next;
      for (std::size_t p = 0; p < s.phonemes.size(); ++p) {
        if (s.phoneme_to_note[p] == static_cast<int>(n)) g = s.phonemes[p];
        if (s.phoneme_to_note[p] == static_cast<int>(n + 1)) next = s.phonemes[p];
      }
      EXPECT_EQ(g, next);
      ++graces;
    }
  }
  EXPECT_GT(graces, 0);
}

TEST(Corpus, SplitHoldsOutSingersAndClasses) {
  SingingSample s;
  s.singer_id = 3;
  s.style = {VocalRange::kSoprano, Emotion::kSad};
  EXPECT_TRUE(is_out_of_domain(s));
  s.singer_id = 0;
  s.style = {VocalRange::kTenor, Emotion::kHappy};
  EXPECT_TRUE(is_out_of_domain(s));
  s.style = {VocalRange::kTenor, Emotion::kSad};
  EXPECT_FALSE(is_out_of_domain(s));
}

TEST(Corpus, DiskRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "cantor_corpus_rt";
  std::filesystem::remove_all(dir);
  CorpusSpec spec{.samples_per_class = 1, .seed = 3, .singers = {0, 5}};
  auto samples = build_corpus(spec);
  ASSERT_EQ(samples.size(), 4u);
  write_corpus(dir, samples);
  auto loaded = read_corpus(dir);
  ASSERT_EQ(loaded.size(), samples.size());
  for (const auto& l : loaded) {
    auto it = std::find_if(samples.begin(), samples.end(),
                           [&](const SingingSample& s) { return s.id == l.id; });
    ASSERT_NE(it, samples.end());
    EXPECT_EQ(l.singer_id, it->singer_id);
    EXPECT_EQ(l.style, it->style);
    EXPECT_EQ(l.uv, it->uv);
    EXPECT_EQ(l.phoneme_durations, it->phoneme_durations);
    EXPECT_EQ(l.score.phonemes, it->score.phonemes);
    for (std::size_t i = 0; i < l.mel.size(); ++i)
      ASSERT_NEAR(l.mel[i], it->mel[i], 1e-5 * (1.0 + std::abs(it->mel[i])));
  }
  MusicalScore back = score_from_json(score_to_json(samples[0].score));
  EXPECT_EQ(back.phonemes, samples[0].score.phonemes);
  EXPECT_THROW(score_from_json("{\"format\":\"score_v2\"}"), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace cantor
