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

// Objective metrics (embedding cosine, F0 frame error) and comparison plots.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "cantor/png.hpp"
#include "cantor/tensor.hpp"

namespace cantor {

/// dot(a, b) / (|a| |b|). Throws std::invalid_argument on a zero vector or
/// a length mismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

inline constexpr double kFfeThresholdCents = 50.0;

/// Fraction of frames with a voicing mismatch, or voiced in both with a
/// pitch deviation above threshold_cents. Throws on a frame-count mismatch.
double ffe(const std::vector<double>& f0_pred, const std::vector<int>& uv_pred,
           const std::vector<double>& f0_gt, const std::vector<int>& uv_gt,
           double threshold_cents = kFfeThresholdCents);

struct SampleMetric {
  std::string id;
  std::string reference_id;
  double cos = 0.0;
  double ffe = 0.0;
};

struct MetricReport {
  double cos = 0.0;  // mean over samples
  double ffe = 0.0;  // mean over samples
  std::vector<SampleMetric> per_sample;
  std::string checkpoint;
  std::string split;

  /// {"cos": .., "ffe": .., "checkpoint": .., "split": .., "per_sample": [..]}
  std::string to_json() const;
  static MetricReport from_json(const std::string& text);
  /// Recomputes the means from per_sample.
  void finalize();
};

struct PlotSample {
  std::string label;
  Tensor mel;              // frames x bins, log amplitude
  std::vector<double> f0;  // Hz per frame, <= 0 where unvoiced
};

/// Layout of comparison figures. Panels are stacked vertically, one per
/// sample, low mel bins at the bottom. Mel values are min-max scaled over the
/// whole figure and coloured on a four-stop ramp
/// (0,0,4) -> (120,28,109) -> (237,105,37) -> (252,253,191). F0 is drawn in
/// pure cyan on a log-frequency axis spanning [f0_min, f0_max] over the
/// panel height.
struct PlotConfig {
  int bin_px = 2;
  int frame_px = 2;
  int margin = 6;
  double f0_min = 50.0;
  double f0_max = 1100.0;
};

/// Panel-relative pixel row (0 = top) of a frequency on the F0 axis.
int f0_to_row(double hz, int panel_height, const PlotConfig& cfg);

Image render_comparison(const std::vector<PlotSample>& samples,
                        const PlotConfig& cfg = {});
/// PNG with one tEXt chunk per panel label. Throws on an empty list.
void plot_comparison(const std::vector<PlotSample>& samples,
                     const std::string& path, const PlotConfig& cfg = {});

}  // namespace cantor
