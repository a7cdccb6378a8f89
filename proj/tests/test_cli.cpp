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

// End-to-end runs of the cantor binary.

#include <gtest/gtest.h>
#include <json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::temp_directory_path() / "cantor_cli_test");
    fs::remove_all(*dir_);
    fs::create_directories(*dir_);
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }

  static CliResult run(const std::string& args) {
    const fs::path out = *dir_ / "stdout.txt", err = *dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_->string() + "' && '" CANTOR_CLI "' " +
                            args + " > '" + out.string() + "' 2> '" +
                            err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  static void expect_error(const CliResult& r, const std::string& category, int code) {
    EXPECT_EQ(r.code, code) << r.err;
    const auto j = nlohmann::json::parse(r.err);
    EXPECT_EQ(j.at("error"), category);
    EXPECT_FALSE(j.at("message").get<std::string>().empty());
  }

  static fs::path* dir_;
};

fs::path* CliTest::dir_ = nullptr;

TEST_F(CliTest, FullWorkflow) {
  CliResult r = run("gen-corpus --out corpus --per-class 2 --seed 5");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out).at("samples"), 32);
  const std::string ref = "corpus/0/s0_happy_000.json";
  ASSERT_TRUE(fs::exists(*dir_ / ref));

  r = run("train-classifier --corpus corpus --out clf.ckpt --epochs 1");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(nlohmann::json::parse(r.out).contains("timbre_accuracy"));

  std::ofstream(*dir_ / "train.cfg")
      << "corpus_dir = corpus\nclassifier = clf.ckpt\nout_dir = run\n"
         "model.rq_codes = 8\nmodel.pitch_residual = 16\nmodel.pitch_layers = 3\n"
         "model.pitch_steps = 20\nmodel.decoder_residual = 16\n"
         "model.decoder_layers = 3\nbatch_size = 2\ncrop_frames = 32\n"
         "max_steps = 2\nlog_every = 1\n";
  r = run("train --config train.cfg");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(*dir_ / "run/final.ckpt"));
  EXPECT_TRUE(fs::exists(*dir_ / "run/train_log.tsv"));

  r = run("synthesize --ckpt run/final.ckpt --ref " + ref + " --out syn");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto meta = nlohmann::json::parse(slurp(*dir_ / "syn/result.json"));
  EXPECT_GE(meta.at("ffe").get<double>(), 0.0);
  EXPECT_LE(meta.at("ffe").get<double>(), 1.0);
  EXPECT_TRUE(fs::exists(*dir_ / "syn/mel.bin"));
  EXPECT_TRUE(fs::exists(*dir_ / "syn/comparison.png"));

  r = run("synthesize --ckpt run/final.ckpt --ref " + ref + " --out syn2");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(*dir_ / "syn/mel.bin"), slurp(*dir_ / "syn2/mel.bin"));

  r = run("evaluate --ckpt run/final.ckpt --split ood --corpus corpus --limit 2 "
          "--out report.json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out).at("samples"), 2);
  EXPECT_TRUE(nlohmann::json::parse(slurp(*dir_ / "report.json")).is_object());

  r = run("plot --inputs syn " + ref + " --out fig.png");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(*dir_ / "fig.png").substr(1, 3), "PNG");

  r = run("synthesize --ckpt run/final.ckpt --ref " + ref +
          " --mode nonparallel --out x");
  expect_error(r, "input", 6);

  std::ofstream(*dir_ / "trunc.ckpt") << slurp(*dir_ / "run/final.ckpt").substr(0, 100);
  expect_error(run("synthesize --ckpt trunc.ckpt --ref " + ref + " --out x"),
               "checkpoint", 5);
}

TEST_F(CliTest, DescribeConfigListsKeys) {
  const CliResult r = run("describe-config");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("max_steps"), std::string::npos);
  EXPECT_NE(r.out.find("model.use_rsa"), std::string::npos);
}

TEST_F(CliTest, ErrorCategories) {
  expect_error(run(""), "usage", 2);
  expect_error(run("train"), "usage", 2);
  std::ofstream(*dir_ / "bad.cfg") << "nokey = 1\n";
  expect_error(run("train --config bad.cfg"), "config", 3);
  expect_error(run("synthesize --ckpt missing.ckpt --ref missing.json --out x"),
               "checkpoint", 5);
  expect_error(run("train-classifier --corpus no_such_dir --out c.ckpt"), "io", 4);
}

}  // namespace
