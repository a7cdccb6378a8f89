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

// Spectral analysis: log-mel spectrogram and autocorrelation pitch tracking
// on a fixed 48 kHz / hop 256 frame grid.

#pragma once

#include <span>
#include <vector>

#include "cantor/tensor.hpp"

namespace cantor::dsp {

inline constexpr int kSampleRate = 48000;
inline constexpr int kWindow = 1024;  // also the FFT size
inline constexpr int kHop = 256;
inline constexpr int kMelBins = 80;
inline constexpr double kMelFmin = 20.0;
inline constexpr double kMelFmax = 16000.0;
/// Magnitudes are clamped here before the natural log.
inline constexpr double kLogFloorAmplitude = 1e-5;
double log_floor();  // log(kLogFloorAmplitude)

inline constexpr double kF0Min = 50.0;
inline constexpr double kF0Max = 1100.0;
inline constexpr double kVoicingThreshold = 0.45;  // on normalised correlation

double hz_to_mel(double hz);  // HTK formula
double mel_to_hz(double mel);
double hz_to_midi(double hz);
double midi_to_hz(double midi);

/// Number of frames produced for n samples: floor(n / hop) + 1.
int frame_count(std::size_t samples);

/// 80 triangular filters (peak 1) on the HTK mel scale over the rfft bins.
class MelFilterbank {
 public:
  MelFilterbank();
  /// Centre frequency of filter m in Hz.
  double center_hz(int m) const { return centers_hz_[m + 1]; }
  /// Continuous triangular response of filter m at frequency hz.
  double response(int m, double hz) const;
  const Tensor& weights() const { return weights_; }  // bins x (fft/2+1)

 private:
  std::vector<double> centers_hz_;  // kMelBins + 2 edge points
  Tensor weights_;
};

const MelFilterbank& mel_filterbank();

/// Log-amplitude mel spectrogram, frames x 80. Hann window, centred frames
/// with zero padding. Throws std::invalid_argument unless sample_rate is
/// 48000.
Tensor extract_mel(std::span<const double> waveform,
                   int sample_rate = kSampleRate);

struct PitchTrack {
  std::vector<double> f0;  // Hz, 0 where unvoiced
  std::vector<int> uv;     // 1 voiced, 0 unvoiced
  std::vector<double> periodicity;
};

/// Cumulative-mean-normalised difference (YIN-style) pitch tracker on the
/// extract_mel frame grid, searching 50-1100 Hz.
PitchTrack extract_f0(std::span<const double> waveform,
                      int sample_rate = kSampleRate);

}  // namespace cantor::dsp
