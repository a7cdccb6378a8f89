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

#include "cantor/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace cantor {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_similarity: length mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0)
    throw std::invalid_argument("cosine_similarity: zero vector");
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

double ffe(const std::vector<double>& f0_pred, const std::vector<int>& uv_pred,
           const std::vector<double>& f0_gt, const std::vector<int>& uv_gt,
           double threshold_cents) {
  const std::size_t n = f0_gt.size();
  if (f0_pred.size() != n || uv_pred.size() != n || uv_gt.size() != n)
    throw std::invalid_argument("ffe: frame count mismatch (" +
                                std::to_string(f0_pred.size()) + " vs " +
                                std::to_string(n) + ")");
  if (n == 0) throw std::invalid_argument("ffe: empty contour");
  std::size_t errors = 0;
  for (std::size_t f = 0; f < n; ++f) {
    const bool vp = uv_pred[f] != 0, vg = uv_gt[f] != 0;
    if (vp != vg) {
      ++errors;
    } else if (vp) {
      if (!(f0_pred[f] > 0.0 && f0_gt[f] > 0.0) ||
          std::abs(1200.0 * std::log2(f0_pred[f] / f0_gt[f])) > threshold_cents)
        ++errors;
    }
  }
  return static_cast<double>(errors) / n;
}

void MetricReport::finalize() {
  cos = ffe = 0.0;
  if (per_sample.empty()) return;
  for (const auto& s : per_sample) {
    cos += s.cos;
    ffe += s.ffe;
  }
  cos /= per_sample.size();
  ffe /= per_sample.size();
}

std::string MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["cos"] = cos;
  j["ffe"] = ffe;
  j["checkpoint"] = checkpoint;
  j["split"] = split;
  j["per_sample"] = nlohmann::ordered_json::array();
  for (const auto& s : per_sample)
    j["per_sample"].push_back({{"id", s.id},
                               {"reference_id", s.reference_id},
                               {"cos", s.cos},
                               {"ffe", s.ffe}});
  return j.dump(2) + "\n";
}

MetricReport MetricReport::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  auto cos_of = [](const nlohmann::json& o) {
    const double v = o.at("cos").get<double>();
    if (!(v >= -1.0 && v <= 1.0))
      throw std::invalid_argument("report: cos outside [-1, 1]");
    return v;
  };
  auto ffe_of = [](const nlohmann::json& o) {
    const double v = o.at("ffe").get<double>();
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("report: ffe outside [0, 1]");
    return v;
  };
  MetricReport r;
  r.cos = cos_of(j);
  r.ffe = ffe_of(j);
  r.checkpoint = j.at("checkpoint").get<std::string>();
  r.split = j.at("split").get<std::string>();
  for (const auto& s : j.at("per_sample"))
    r.per_sample.push_back({s.at("id").get<std::string>(),
                            s.at("reference_id").get<std::string>(), cos_of(s),
                            ffe_of(s)});
  return r;
}

int f0_to_row(double hz, int panel_height, const PlotConfig& cfg) {
  const double lo = std::log(cfg.f0_min), hi = std::log(cfg.f0_max);
  const double u = std::clamp((std::log(hz) - lo) / (hi - lo), 0.0, 1.0);
  return static_cast<int>(std::lround((1.0 - u) * (panel_height - 1)));
}

namespace {

void ramp(double u, std::uint8_t out[3]) {
  static const double stops[4][3] = {
      {0, 0, 4}, {120, 28, 109}, {237, 105, 37}, {252, 253, 191}};
  u = std::clamp(u, 0.0, 1.0) * 3.0;
  const int i = std::min(2, static_cast<int>(u));
  const double w = u - i;
  for (int c = 0; c < 3; ++c)
    out[c] = static_cast<std::uint8_t>(
        std::lround((1.0 - w) * stops[i][c] + w * stops[i + 1][c]));
}

}  // namespace

Image render_comparison(const std::vector<PlotSample>& samples,
                        const PlotConfig& cfg) {
  if (samples.empty()) throw std::invalid_argument("plot: no samples");
  int max_frames = 1, bins = 0;
  double lo = 1e300, hi = -1e300;
  for (const auto& s : samples) {
    if (s.mel.rows() == 0) throw std::invalid_argument("plot: empty mel in '" + s.label + "'");
    if (bins && s.mel.cols() != bins)
      throw std::invalid_argument("plot: mel bin counts differ");
    bins = s.mel.cols();
    max_frames = std::max(max_frames, s.mel.rows());
    for (std::size_t i = 0; i < s.mel.size(); ++i) {
      lo = std::min(lo, s.mel[i]);
      hi = std::max(hi, s.mel[i]);
    }
  }
  const double span = hi > lo ? hi - lo : 1.0;
  const int ph = bins * cfg.bin_px;
  const int width = 2 * cfg.margin + max_frames * cfg.frame_px;
  const int height = cfg.margin + static_cast<int>(samples.size()) * (ph + cfg.margin);
  Image img(width, height, 255);
  for (std::size_t p = 0; p < samples.size(); ++p) {
    const auto& s = samples[p];
    const int y0 = cfg.margin + static_cast<int>(p) * (ph + cfg.margin);
    std::uint8_t col[3];
    for (int f = 0; f < s.mel.rows(); ++f)
      for (int b = 0; b < bins; ++b) {
        ramp((s.mel(f, b) - lo) / span, col);
        for (int dx = 0; dx < cfg.frame_px; ++dx)
          for (int dy = 0; dy < cfg.bin_px; ++dy)
            img.set(cfg.margin + f * cfg.frame_px + dx,
                    y0 + (bins - 1 - b) * cfg.bin_px + dy, col[0], col[1], col[2]);
      }
    const int n = std::min<int>(static_cast<int>(s.f0.size()), s.mel.rows());
    for (int f = 0; f < n; ++f) {
      if (!(s.f0[f] > 0.0)) continue;
      const int row = f0_to_row(s.f0[f], ph, cfg);
      for (int dx = 0; dx < cfg.frame_px; ++dx)
        img.set(cfg.margin + f * cfg.frame_px + dx, y0 + row, 0, 255, 255);
    }
  }
  return img;
}

void plot_comparison(const std::vector<PlotSample>& samples,
                     const std::string& path, const PlotConfig& cfg) {
  const Image img = render_comparison(samples, cfg);
  std::vector<std::pair<std::string, std::string>> text;
  for (std::size_t i = 0; i < samples.size(); ++i)
    text.emplace_back("panel" + std::to_string(i), samples[i].label);
  write_png(path, img, text);
}

}  // namespace cantor
