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

#include "cantor/dsp.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/FFT>

namespace cantor::dsp {
namespace {

constexpr int kBins = kWindow / 2 + 1;

void check_rate(int sample_rate) {
  if (sample_rate != kSampleRate)
    throw std::invalid_argument("expected " + std::to_string(kSampleRate) +
                                " Hz audio, got " +
                                std::to_string(sample_rate));
}

const std::vector<double>& hann() {
  static const std::vector<double> w = [] {
    std::vector<double> v(kWindow);
    for (int i = 0; i < kWindow; ++i)
      v[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / kWindow);
    return v;
  }();
  return w;
}

}  // namespace

double log_floor() { return std::log(kLogFloorAmplitude); }

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}
double hz_to_midi(double hz) { return 69.0 + 12.0 * std::log2(hz / 440.0); }
double midi_to_hz(double midi) {
  return 440.0 * std::pow(2.0, (midi - 69.0) / 12.0);
}

int frame_count(std::size_t samples) {
  return static_cast<int>(samples / kHop) + 1;
}

MelFilterbank::MelFilterbank() : weights_(kMelBins, kBins) {
  const double lo = hz_to_mel(kMelFmin), hi = hz_to_mel(kMelFmax);
  centers_hz_.resize(kMelBins + 2);
  for (int i = 0; i < kMelBins + 2; ++i)
    centers_hz_[i] = mel_to_hz(lo + (hi - lo) * i / (kMelBins + 1));
  for (int m = 0; m < kMelBins; ++m)
    for (int k = 0; k < kBins; ++k)
      weights_(m, k) = response(m, static_cast<double>(k) * kSampleRate / kWindow);
}

double MelFilterbank::response(int m, double hz) const {
  const double l = centers_hz_[m], c = centers_hz_[m + 1],
               r = centers_hz_[m + 2];
  if (hz <= l || hz >= r) return 0.0;
  return hz <= c ? (hz - l) / (c - l) : (r - hz) / (r - c);
}

const MelFilterbank& mel_filterbank() {
  static const MelFilterbank fb;
  return fb;
}

Tensor extract_mel(std::span<const double> waveform, int sample_rate) {
  check_rate(sample_rate);
  const int frames = frame_count(waveform.size());
  const auto& win = hann();
  const auto& fb = mel_filterbank().weights();
  Eigen::FFT<double> fft;
  std::vector<double> buf(kWindow);
  std::vector<std::complex<double>> spec;
  Eigen::VectorXd mag(kBins);
  Tensor mel(frames, kMelBins);
  const long n = static_cast<long>(waveform.size());
  for (int f = 0; f < frames; ++f) {
    const long start = static_cast<long>(f) * kHop - kWindow / 2;
    for (int i = 0; i < kWindow; ++i) {
      const long s = start + i;
      buf[i] = (s >= 0 && s < n) ? waveform[s] * win[i] : 0.0;
    }
    fft.fwd(spec, buf);
    for (int k = 0; k < kBins; ++k) mag[k] = std::abs(spec[k]);
    Eigen::VectorXd m = fb.mat() * mag;
    for (int b = 0; b < kMelBins; ++b)
      mel(f, b) = std::log(std::max(m[b], kLogFloorAmplitude));
  }
  return mel;
}

PitchTrack extract_f0(std::span<const double> waveform, int sample_rate) {
  check_rate(sample_rate);
  constexpr int kIntegration = 1024;
  constexpr double kDipThreshold = 0.15;
  constexpr double kSilenceRms = 1e-4;
  const int tau_min = static_cast<int>(std::floor(sample_rate / kF0Max));
  const int tau_max = static_cast<int>(std::ceil(sample_rate / kF0Min));
  const int frames = frame_count(waveform.size());
  const long n = static_cast<long>(waveform.size());
  const int span = kIntegration + tau_max + 2;

  PitchTrack out;
  out.f0.assign(frames, 0.0);
  out.uv.assign(frames, 0);
  out.periodicity.assign(frames, 0.0);
  std::vector<double> seg(span), diff(tau_max + 2), cmnd(tau_max + 2);
  for (int f = 0; f < frames; ++f) {
    const long start = static_cast<long>(f) * kHop - span / 2;
    double energy = 0.0;
    for (int i = 0; i < span; ++i) {
      const long s = start + i;
      seg[i] = (s >= 0 && s < n) ? waveform[s] : 0.0;
    }
    for (int i = (span - kIntegration) / 2, e = i + kIntegration; i < e; ++i)
      energy += seg[i] * seg[i];
    if (std::sqrt(energy / kIntegration) < kSilenceRms) continue;

    // Energy-normalised difference: 1 - normalised cross-correlation. Both
    // windows of each lag pair are centred on the frame time, and samples
    // outside the signal are skipped rather than treated as zeros.
    diff[0] = 0.0;
    const int mid = span / 2;
    const long valid_lo = std::max(0L, -start);
    const long valid_hi = std::min<long>(span, n - start);
    for (int tau = 1; tau <= tau_max + 1; ++tau) {
      const int lo = mid - (kIntegration + tau) / 2;
      const long j0 = std::max<long>(lo, valid_lo);
      const long j1 = std::min<long>(lo + kIntegration, valid_hi - tau);
      if (j1 - j0 < kIntegration / 2) {
        diff[tau] = 1.0;
        continue;
      }
      double r = 0.0, e0 = 0.0, e1 = 0.0;
      for (long j = j0; j < j1; ++j) {
        r += seg[j] * seg[j + tau];
        e0 += seg[j] * seg[j];
        e1 += seg[j + tau] * seg[j + tau];
      }
      const double denom = e0 + e1;
      diff[tau] = denom > 0.0 ? 1.0 - 2.0 * r / denom : 1.0;
    }
    cmnd[0] = 1.0;
    double running = 0.0;
    for (int tau = 1; tau <= tau_max + 1; ++tau) {
      running += diff[tau];
      cmnd[tau] = running > 0.0 ? diff[tau] * tau / running : 1.0;
    }
    int best = -1;
    for (int tau = tau_min; tau <= tau_max; ++tau) {
      if (cmnd[tau] < kDipThreshold) {
        while (tau + 1 <= tau_max && cmnd[tau + 1] < cmnd[tau]) ++tau;
        best = tau;
        break;
      }
    }
    if (best < 0) {
      best = tau_min;
      for (int tau = tau_min; tau <= tau_max; ++tau)
        if (cmnd[tau] < cmnd[best]) best = tau;
    }
    const double periodicity = 1.0 - diff[best];
    out.periodicity[f] = periodicity;
    if (periodicity < kVoicingThreshold) continue;
    // Parabolic refinement of the dip location.
    double shift = 0.0;
    const double a = cmnd[best - 1], b = cmnd[best], c = cmnd[best + 1];
    const double denom = a - 2.0 * b + c;
    if (denom > 0.0) shift = 0.5 * (a - c) / denom;
    out.f0[f] = sample_rate / (best + shift);
    out.uv[f] = 1;
  }
  return out;
}

}  // namespace cantor::dsp
