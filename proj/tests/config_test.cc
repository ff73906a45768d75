//
// Copyright 2026 The AdaClip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "adaclip/config.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "adaclip/errors.h"
#include "gtest/gtest.h"

namespace adaclip {
namespace {

Json Minimal() {
  return Json::parse(R"({
    "task": {"num_users": 200},
    "model": {"kind": "logistic_regression"},
    "rounds": 5
  })");
}

bool Contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

ConfigError ExpectConfigError(const Json& doc) {
  try {
    ValidateConfig(doc);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError for " << doc.dump();
  return ConfigError("", "");
}

TEST(ValidateConfigTest, MinimalConfigGetsDefaults) {
  const RunConfig cfg = ValidateConfig(Minimal());
  const TrainParams& p = cfg.train;
  EXPECT_EQ(p.clip.mode, ClipMode::kAdaptive);
  EXPECT_EQ(p.clip.quantile.clip_learning_rate, 0.2);
  EXPECT_EQ(p.clip.quantile.initial_clip, 0.1);
  EXPECT_EQ(p.clip.quantile.target_quantile, 0.5);
  EXPECT_EQ(p.beta, 0.9);
  EXPECT_EQ(p.sigma_b, -1.0);
  EXPECT_EQ(*cfg.clients_per_round, 100.0);
  for (const char* key : {"clip.clip_lr", "clip.initial_clip", "momentum", "count_noise_stddev",
                          "clients_per_round", "seed", "task.seed"}) {
    EXPECT_TRUE(Contains(cfg.defaulted, key)) << key;
  }
  EXPECT_FALSE(Contains(cfg.defaulted, "rounds"));

  const LoadedRun run = LoadRun(cfg);
  EXPECT_EQ(run.params.q, 0.5);
  EXPECT_EQ(run.privacy.sigma_b, 5.0);
  EXPECT_NEAR(run.privacy.z_delta, 0.0, 0.0);
}

TEST(ValidateConfigTest, InfeasibleCalibration) {
  Json doc = Minimal();
  doc["clients_per_round"] = 1;
  doc["noise_multiplier"] = 1.0;
  const ConfigError e = ExpectConfigError(doc);
  EXPECT_EQ(e.path(), "noise_multiplier");
}

TEST(ValidateConfigTest, UnknownKeyIsNamed) {
  Json doc = Minimal();
  doc["cliip"] = 1;
  EXPECT_EQ(ExpectConfigError(doc).path(), "cliip");
  doc = Minimal();
  doc["clip"] = {{"target_quantil", 0.5}};
  EXPECT_EQ(ExpectConfigError(doc).path(), "clip.target_quantil");
}

TEST(ValidateConfigTest, FieldPathsOnTypeAndRangeErrors) {
  Json doc = Minimal();
  doc["rounds"] = "many";
  EXPECT_EQ(ExpectConfigError(doc).path(), "rounds");
  doc = Minimal();
  doc["clip"] = {{"target_quantile", 1.5}};
  EXPECT_EQ(ExpectConfigError(doc).path(), "clip.target_quantile");
  doc = Minimal();
  doc["model"]["kind"] = "cnn";
  EXPECT_EQ(ExpectConfigError(doc).path(), "model.kind");
  doc = Minimal();
  doc.erase("model");
  EXPECT_EQ(ExpectConfigError(doc).path(), "model");
  doc = Minimal();
  doc["q"] = 0.1;
  doc["clients_per_round"] = 10;
  EXPECT_EQ(ExpectConfigError(doc).path(), "q");
  doc = Minimal();
  doc["clip"] = {{"mode", "fixed"}};
  EXPECT_EQ(ExpectConfigError(doc).path(), "clip.clip");
  doc = Minimal();
  doc["task"]["spread"] = 0.5;
  EXPECT_EQ(ExpectConfigError(doc).path(), "task.spread");
  doc = Minimal();
  doc["seed"] = -3;
  EXPECT_EQ(ExpectConfigError(doc).path(), "seed");
}

TEST(ValidateConfigTest, FixedMode) {
  Json doc = Minimal();
  doc["clip"] = {{"mode", "fixed"}, {"clip", 2.5}};
  doc["noise_multiplier"] = 1.0;
  const RunConfig cfg = ValidateConfig(doc);
  EXPECT_EQ(cfg.train.clip.mode, ClipMode::kFixed);
  EXPECT_EQ(cfg.train.clip.fixed_clip, 2.5);
  EXPECT_EQ(LoadRun(cfg).privacy.z_delta, 1.0);
}

TEST(ApplyOverrideTest, DottedPaths) {
  Json doc = Minimal();
  ApplyOverride(doc, "clip.target_quantile=0.7");
  ApplyOverride(doc, "model.kind=mlp");
  ApplyOverride(doc, "server_lr", 3.0);
  EXPECT_EQ(doc["clip"]["target_quantile"], 0.7);
  EXPECT_EQ(doc["model"]["kind"], "mlp");
  EXPECT_EQ(doc["server_lr"], 3.0);
  EXPECT_THROW(ApplyOverride(doc, "novalue"), ConfigError);
  EXPECT_THROW(ApplyOverride(doc, "rounds.x=1"), ConfigError);
}

// Re-validating the echo must reproduce the run bit for bit.
TEST(ConfigEchoTest, ReproducesRun) {
  Json doc = Minimal();
  doc["noise_multiplier"] = 0.3;
  doc["seed"] = 12;
  doc["model"] = {{"kind", "mlp"}, {"hidden_dim", 4}};
  const RunConfig cfg = ValidateConfig(doc);
  const LoadedRun run = LoadRun(cfg);
  const TrainResult a = Train(run.params, run.data);

  const Json echo = ConfigEcho(cfg, run);
  const RunConfig cfg2 = ValidateConfig(Json::parse(echo.dump()));
  const LoadedRun run2 = LoadRun(cfg2);
  EXPECT_EQ(cfg2.defaulted, std::vector<std::string>{});
  const TrainResult b = Train(run2.params, run2.data);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(ConfigEcho(cfg2, run2), echo);

  const Json resolved = ResolvedSummary(cfg, run);
  EXPECT_EQ(resolved["z_delta"].get<double>(), run.privacy.z_delta);
  EXPECT_GT(resolved["z_delta"].get<double>(), 0.3);
}

TEST(LoadRunTest, CsvSourceInfersInputDim) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "adaclip_config_test.csv").string();
  {
    std::ofstream out(path);
    out << "uid,a,b,label\n";
    for (int i = 0; i < 40; ++i) out << "u" << i % 4 << "," << i << ",1," << i % 2 << "\n";
  }
  Json doc = Json::parse(R"({
    "task": {"source": "csv", "user_column": "uid", "target_column": "label"},
    "model": {"kind": "logistic_regression"},
    "rounds": 2, "q": 0.5
  })");
  doc["task"]["path"] = path;
  const RunConfig cfg = ValidateConfig(doc);
  const LoadedRun run = LoadRun(cfg);
  std::remove(path.c_str());
  EXPECT_EQ(run.params.model.input_dim, 2u);
  EXPECT_EQ(run.data.clients.size(), 4u);
  EXPECT_EQ(run.data.eval.size(), 8u);
}

TEST(LoadRunTest, CsvMissingFileIsIngestError) {
  Json doc = Json::parse(R"({
    "task": {"source": "csv", "path": "/nonexistent.csv"},
    "model": {"kind": "logistic_regression"}, "rounds": 1
  })");
  EXPECT_THROW(LoadRun(ValidateConfig(doc)), IngestError);
}

}  // namespace
}  // namespace adaclip
