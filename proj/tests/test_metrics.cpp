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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cantor/metrics.hpp"
#include "cantor/rng.hpp"

namespace cantor {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Cosine, HandCases) {
  const std::vector<double> a{1, 2}, b{2, 1}, c{-2, 1};
  EXPECT_NEAR(cosine_similarity(a, b), 0.8, 1e-15);
  EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-15);
  EXPECT_NEAR(cosine_similarity(a, c), 0.0, 1e-15);
}

TEST(Cosine, ScaleInvariant) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(16), b(16), ca(16);
    const double c = 0.01 + 10.0 * rng.uniform();
    for (int i = 0; i < 16; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
      ca[i] = c * a[i];
    }
    EXPECT_NEAR(cosine_similarity(ca, b), cosine_similarity(a, b), 1e-12);
  }
}

TEST(Cosine, RejectsZeroAndMismatch) {
  const std::vector<double> z{0, 0}, a{1, 2}, l{1, 2, 3};
  EXPECT_THROW(cosine_similarity(z, a), std::invalid_argument);
  EXPECT_THROW(cosine_similarity(a, l), std::invalid_argument);
}

TEST(Ffe, HandCases) {
  const std::vector<double> gt{220, 220, 0, 330};
  const std::vector<int> uv{1, 1, 0, 1};
  EXPECT_DOUBLE_EQ(ffe(gt, uv, gt, uv), 0.0);

  // One voiced frame a semitone off.
  std::vector<double> pred = gt;
  pred[1] = 220.0 * std::pow(2.0, 100.0 / 1200.0);
  EXPECT_DOUBLE_EQ(ffe(pred, uv, gt, uv), 0.25);

  // 49 cents passes, 51 cents fails.
  pred = gt;
  pred[0] = 220.0 * std::pow(2.0, 49.0 / 1200.0);
  EXPECT_DOUBLE_EQ(ffe(pred, uv, gt, uv), 0.0);
  pred[0] = 220.0 * std::pow(2.0, 51.0 / 1200.0);
  EXPECT_DOUBLE_EQ(ffe(pred, uv, gt, uv), 0.25);

  std::vector<int> flipped(uv.size());
  for (std::size_t i = 0; i < uv.size(); ++i) flipped[i] = 1 - uv[i];
  std::vector<double> f0_flip{0, 0, 200, 0};
  EXPECT_DOUBLE_EQ(ffe(f0_flip, flipped, gt, uv), 1.0);
}

TEST(Ffe, SymmetricOnRandomContours) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(40), b(40);
    std::vector<int> ua(40), ub(40);
    for (int f = 0; f < 40; ++f) {
      ua[f] = rng.uniform() < 0.8;
      ub[f] = rng.uniform() < 0.8;
      a[f] = ua[f] ? 100.0 + 300.0 * rng.uniform() : 0.0;
      b[f] = ub[f] ? a[f] * std::pow(2.0, 80.0 * rng.normal() / 1200.0) : 0.0;
      if (ub[f] && !ua[f]) b[f] = 150.0;
    }
    EXPECT_DOUBLE_EQ(ffe(a, ua, b, ub), ffe(b, ub, a, ua));
  }
}

TEST(Ffe, RejectsMismatch) {
  EXPECT_THROW(ffe({1, 2}, {1, 1}, {1}, {1}), std::invalid_argument);
  EXPECT_THROW(ffe({}, {}, {}, {}), std::invalid_argument);
}

TEST(MetricReport, JsonRoundTripAndSchema) {
  MetricReport r;
  r.checkpoint = "ck";
  r.split = "seen";
  r.per_sample = {{"a", "ra", 0.5, 0.1}, {"b", "rb", 1.0, 0.3}};
  r.finalize();
  EXPECT_DOUBLE_EQ(r.cos, 0.75);
  EXPECT_DOUBLE_EQ(r.ffe, 0.2);
  const MetricReport back = MetricReport::from_json(r.to_json());
  EXPECT_EQ(back.to_json(), r.to_json());
  EXPECT_EQ(back.per_sample.size(), 2u);
  EXPECT_EQ(back.per_sample[1].reference_id, "rb");
  EXPECT_THROW(MetricReport::from_json("{\"cos\": 2.0}"), std::exception);
}

Tensor ramp_mel(int frames, double offset) {
  Tensor m(frames, 80);
  for (int f = 0; f < frames; ++f)
    for (int b = 0; b < 80; ++b) m(f, b) = offset + 0.01 * f - 0.05 * b;
  return m;
}

TEST(Plot, PanelsAndDeterminism) {
  const PlotConfig cfg;
  std::vector<PlotSample> s{{"a", ramp_mel(30, 0.0), std::vector<double>(30, 220.0)},
                            {"b", ramp_mel(20, 1.0), std::vector<double>(20, 440.0)}};
  const Image img = render_comparison(s, cfg);
  EXPECT_EQ(img.width, 2 * cfg.margin + 30 * cfg.frame_px);
  EXPECT_EQ(img.height, cfg.margin + 2 * (80 * cfg.bin_px + cfg.margin));

  const fs::path dir = fs::temp_directory_path() / "cantor_plot_test";
  fs::create_directories(dir);
  plot_comparison(s, (dir / "a.png").string(), cfg);
  plot_comparison(s, (dir / "b.png").string(), cfg);
  const std::string a = slurp(dir / "a.png"), b = slurp(dir / "b.png");
  ASSERT_GT(a.size(), 100u);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.substr(1, 3), "PNG");
  EXPECT_NE(a.find("panel0"), std::string::npos);
  EXPECT_NE(a.find("panel1"), std::string::npos);
  EXPECT_EQ(a.find("panel2"), std::string::npos);
  fs::remove_all(dir);
  EXPECT_THROW(render_comparison({}, cfg), std::invalid_argument);
}

TEST(Plot, ContourExtentMatchesAxis) {
  const PlotConfig cfg;
  const int frames = 60;
  std::vector<double> f0(frames);
  double lo = 1e9, hi = 0.0;
  int first = -1, last = -1;
  for (int f = 0; f < frames; ++f) {
    f0[f] = f % 7 == 3 ? 0.0 : 150.0 * std::pow(2.0, 1.5 * std::sin(0.3 * f));
    if (f0[f] > 0) {
      lo = std::min(lo, f0[f]);
      hi = std::max(hi, f0[f]);
      if (first < 0) first = f;
      last = f;
    }
  }
  const Image img = render_comparison({{"x", ramp_mel(frames, 0.0), f0}}, cfg);

  int top = 1 << 30, bottom = -1, left = 1 << 30, right = -1;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const auto* p = img.px(x, y);
      if (p[0] == 0 && p[1] == 255 && p[2] == 255) {
        top = std::min(top, y);
        bottom = std::max(bottom, y);
        left = std::min(left, x);
        right = std::max(right, x);
      }
    }
  // Axis oracle: log-frequency over [f0_min, f0_max], top row is f0_max.
  const int ph = 80 * cfg.bin_px;
  auto row = [&](double hz) {
    const double u = (std::log(hz) - std::log(cfg.f0_min)) /
                     (std::log(cfg.f0_max) - std::log(cfg.f0_min));
    return cfg.margin + static_cast<int>(std::lround((1.0 - u) * (ph - 1)));
  };
  EXPECT_EQ(top, row(hi));
  EXPECT_EQ(bottom, row(lo));
  EXPECT_EQ(left, cfg.margin + first * cfg.frame_px);
  EXPECT_EQ(right, cfg.margin + (last + 1) * cfg.frame_px - 1);
}

}  // namespace
}  // namespace cantor
