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

#include <sstream>

#include "cantor/config.hpp"
#include "cantor/pipeline.hpp"

namespace cantor {
namespace {

TEST(ConfigTable, TypedParsing) {
  int i = 1;
  double d = 0.5;
  bool b = false;
  std::string s = "x";
  std::uint64_t u = 3;
  ConfigTable t;
  t.bind("i", i, "int");
  t.bind("d", d, "double");
  t.bind("b", b, "bool");
  t.bind("s", s, "string");
  t.bind("u", u, "u64");
  t.parse("# comment\n i = -4 \nd=2.5e-3 # trailing\nb = true\ns = a b\n"
          "u = 18446744073709551615\n\ni = 7\n");
  EXPECT_EQ(i, 7);  // later lines win
  EXPECT_DOUBLE_EQ(d, 2.5e-3);
  EXPECT_TRUE(b);
  EXPECT_EQ(s, "a b");
  EXPECT_EQ(u, 18446744073709551615ULL);
}

TEST(ConfigTable, ErrorsCarryLocation) {
  int i = 0;
  ConfigTable t;
  t.bind("i", i, "int");
  try {
    t.parse("i = 1\ni = one\n", "f.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("f.cfg:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(t.parse("j = 1\n"), ConfigError);
  EXPECT_THROW(t.parse("no equals sign\n"), ConfigError);
  EXPECT_THROW(t.parse("i = 1.5\n"), ConfigError);
  EXPECT_THROW(t.bind("i", i, "again"), std::logic_error);
}

TEST(ConfigTable, DumpParsesBackToSameValues) {
  double d = 0.1 + 0.2;
  int i = 42;
  ConfigTable t;
  t.bind("d", d, "");
  t.bind("i", i, "");
  const std::string text = t.dump();
  d = 0.0;
  i = 0;
  t.parse(text);
  EXPECT_EQ(d, 0.1 + 0.2);  // shortest round-trip formatting
  EXPECT_EQ(i, 42);
}

TEST(TrainConfig, DefaultsMatchDocumentedValues) {
  const TrainConfig c;
  EXPECT_EQ(c.weights.dur, 1.0);
  EXPECT_EQ(c.weights.gdiff, 1.0);
  EXPECT_EQ(c.weights.mdiff, 1.0);
  EXPECT_EQ(c.weights.commit, 1.0);
  EXPECT_EQ(c.weights.mae, 1.0);
  EXPECT_EQ(c.weights.ssim, 1.0);
  EXPECT_EQ(c.beta1, 0.9);
  EXPECT_EQ(c.beta2, 0.98);
  EXPECT_EQ(c.lr, 2e-4);
  EXPECT_EQ(c.warmup_steps, 1000);
  EXPECT_EQ(c.max_steps, 20000);
}

TEST(TrainConfig, EveryKeyDocumented) {
  TrainConfig c;
  ConfigTable t;
  c.bind(t);
  std::istringstream in(t.describe());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto colon = line.find("): ");
    ASSERT_NE(colon, std::string::npos) << line;
    EXPECT_GT(line.size(), colon + 4) << "undocumented: " << line;
    EXPECT_NE(line.find("(default "), std::string::npos) << line;
  }
  EXPECT_GT(n, 40);
}

TEST(TrainConfig, PresetAppliesBeforeOverrides) {
  const TrainConfig desk = TrainConfig::parse("preset = desk\nmodel.hidden = 32\n", "t");
  EXPECT_EQ(desk.model.hidden, 32);
  EXPECT_EQ(desk.model.rsa.hidden, 32);  // resolved
  EXPECT_EQ(desk.model.decoder.layers, ModelConfig::desk().decoder.layers);
  EXPECT_EQ(desk.lr, 1e-3);
  EXPECT_EQ(desk.warmup_steps, 200);
  const TrainConfig paper = TrainConfig::parse("lr = 5e-4\npreset = paper\n", "t");
  EXPECT_EQ(paper.lr, 5e-4);
  EXPECT_EQ(paper.warmup_steps, 1000);
  EXPECT_EQ(paper.model.hidden, 256);
  EXPECT_EQ(paper.model.decoder.layers, 20);
  EXPECT_THROW(TrainConfig::parse("preset = huge\n", "t"), ConfigError);
}

TEST(TrainConfig, AblationFlagsParse) {
  const TrainConfig c = TrainConfig::parse(
      "model.use_umln = false\nmodel.use_rsa = false\n"
      "model.use_pitch_diffusion = false\nmodel.use_diffusion_decoder = false\n",
      "t");
  EXPECT_FALSE(c.model.use_umln);
  EXPECT_FALSE(c.model.use_rsa);
  EXPECT_FALSE(c.model.use_pitch_diffusion);
  EXPECT_FALSE(c.model.use_diffusion_decoder);
}

TEST(TrainConfig, ValidationRejectsBadValues) {
  EXPECT_THROW(TrainConfig::parse("lambda_mae = -1\n", "t"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("max_steps = 0\n", "t"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("beta2 = 1.0\n", "t"), ConfigError);
  EXPECT_THROW(TrainConfig::parse("batch_size = 0\n", "t"), ConfigError);
  EXPECT_NO_THROW(TrainConfig::parse("lambda_mae = 0\n", "t"));
}

TEST(TrainConfig, DumpRoundTrips) {
  TrainConfig c = TrainConfig::parse("seed = 99\nlr = 0.001\nmodel.rq_codes = 16\n", "t");
  const TrainConfig back = TrainConfig::parse(c.dump(), "dump");
  EXPECT_EQ(back.dump(), c.dump());
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.model.rsa.rq_codes, 16);
}

}  // namespace
}  // namespace cantor
