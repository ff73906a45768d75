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

#include "adaclip/sweep.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "adaclip/errors.h"
#include "gtest/gtest.h"

namespace adaclip {
namespace {

Json SmallBase() {
  return Json::parse(R"({
    "task": {"num_users": 120, "input_dim": 4},
    "model": {"kind": "logistic_regression"},
    "rounds": 40,
    "clients_per_round": 20,
    "client_lr": 0.3,
    "seed": 5
  })");
}

TEST(LogSpaceTest, EndpointsAndRatio) {
  const auto v = LogSpace(0.1, 10.0, 5);
  ASSERT_EQ(v.size(), 5u);
  EXPECT_EQ(v.front(), 0.1);
  EXPECT_EQ(v.back(), 10.0);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_NEAR(v[i] / v[i - 1], std::sqrt(10.0), 1e-12);
  EXPECT_NEAR(LogSpace(1, 4, 1)[0], 2.0, 1e-15);
}

TEST(PostWarmupClipsTest, StartsAtFirstRoundWithinTolerance) {
  std::vector<RoundRecord> recs(5);
  const double fracs[] = {0.0, 0.2, 0.46, 0.9, 0.5};
  for (std::size_t i = 0; i < recs.size(); ++i) {
    recs[i].frac_below_exact = fracs[i];
    recs[i].clip_before = static_cast<double>(i + 1);
  }
  EXPECT_EQ(PostWarmupClips(recs, 0.5), (std::vector<double>{3, 4, 5}));
  EXPECT_EQ(PostWarmupClips(recs, 0.9), (std::vector<double>{4, 5}));
  EXPECT_TRUE(PostWarmupClips(recs, 0.1).empty());
}

TEST(SummarizeTest, BestLrWithSmallestMultiplierOnTies) {
  std::vector<std::optional<CellResult>> cells;
  auto add = [&](double m, double metric) {
    CellResult c;
    c.cell = {cells.size(), ClipMode::kAdaptive, 0.5, 0.0, m};
    c.metric = metric;
    cells.push_back(c);
  };
  add(1.0, 0.7);
  add(3.0, 0.8);
  add(10.0, 0.8);
  auto rows = sweep_internal::Summarize(cells, /*higher_is_better=*/true);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].best_lr_multiplier, 3.0);
  rows = sweep_internal::Summarize(cells, /*higher_is_better=*/false);
  EXPECT_EQ(rows[0].best_lr_multiplier, 1.0);
}

SummaryRow Row(ClipMode mode, double param, double z, double metric) {
  SummaryRow r;
  r.mode = mode;
  r.clip_param = param;
  r.z = z;
  r.metric = metric;
  return r;
}

TEST(FindKneeTest, PicksLargestZWithinTolerance) {
  const std::vector<SummaryRow> rows = {
      Row(ClipMode::kAdaptive, 0.5, 0.0, 0.90), Row(ClipMode::kFixed, 1.0, 0.0, 0.91),
      Row(ClipMode::kAdaptive, 0.5, 0.03, 0.88), Row(ClipMode::kFixed, 1.0, 0.03, 0.86),
      Row(ClipMode::kFixed, 2.0, 0.03, 0.89),   Row(ClipMode::kAdaptive, 0.3, 0.03, 0.80),
      Row(ClipMode::kAdaptive, 0.5, 0.1, 0.70), Row(ClipMode::kFixed, 1.0, 0.1, 0.60),
  };
  const KneeReport k = FindKnee(rows, true);
  ASSERT_TRUE(k.found);
  EXPECT_EQ(k.z_star, 0.03);
  EXPECT_EQ(k.baseline_metric, 0.91);
  EXPECT_EQ(k.best_fixed_clip, 2.0);
  EXPECT_EQ(k.adaptive_quantile, 0.5);
  EXPECT_NEAR(k.relative_gap, 0.01 / 0.89, 1e-12);
}

TEST(ParseSweepSpecTest, DefaultsOverridesAndErrors) {
  Json doc = {{"base", SmallBase()}, {"overrides", {{"clip.clip_lr", 0.3}}}};
  const SweepSpec spec = ParseSweepSpec(doc);
  EXPECT_EQ(spec.quantiles, DefaultQuantiles());
  EXPECT_EQ(spec.noise_multipliers, (std::vector<double>{0, 0.01, 0.03, 0.1}));
  EXPECT_NEAR(spec.server_lr_multipliers[1], 1.7782794100389228, 1e-15);
  EXPECT_EQ(spec.base["clip"]["clip_lr"], 0.3);

  doc["quantiles"] = {0.5, 1.5};
  EXPECT_THROW(ParseSweepSpec(doc), ConfigError);
  doc.erase("quantiles");
  doc["server_lr_multipliers"] = Json::array();
  EXPECT_THROW(ParseSweepSpec(doc), ConfigError);
  doc.erase("server_lr_multipliers");
  doc["bogus"] = 1;
  EXPECT_THROW(ParseSweepSpec(doc), ConfigError);
  EXPECT_THROW(ParseSweepSpec(Json::object()), ConfigError);
}

TEST(RunSweepTest, OneByOneMatchesTrain) {
  SweepSpec spec;
  spec.base = SmallBase();
  spec.server_lr_multipliers = {1.0};
  spec.quantiles = {0.5};
  spec.noise_multipliers = {0.0};
  spec.fixed_clip_count = 0;
  const SweepResult sweep = RunSweep(spec);
  ASSERT_EQ(sweep.cells.size(), 1u);

  const RunConfig cfg = ValidateConfig(spec.base);
  const LoadedRun run = LoadRun(cfg);
  const TrainResult tr = Train(run.params, run.data);
  std::ostringstream a, b;
  WriteMetricsCsv(a, sweep.cells[0].records);
  WriteMetricsCsv(b, tr.records);
  EXPECT_EQ(a.str(), b.str());
}

TEST(RunSweepTest, DeterministicAcrossWorkers) {
  SweepSpec spec;
  spec.base = SmallBase();
  spec.server_lr_multipliers = {1.0, 3.0};
  spec.quantiles = {0.2, 0.8};
  spec.noise_multipliers = {0.0, 0.1};
  spec.fixed_clip_count = 3;
  const SweepResult one = RunSweep(spec);
  spec.workers = 4;
  const SweepResult four = RunSweep(spec);
  std::ostringstream a, b;
  WriteSummaryCsv(a, one.rows);
  WriteSummaryCsv(b, four.rows);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(one.fixed_clips, four.fixed_clips);
  // 2 z x (2 quantiles + 3 fixed clips) summary rows.
  EXPECT_EQ(one.rows.size(), 10u);
  ASSERT_EQ(one.fixed_clips.size(), 3u);
  EXPECT_LT(one.fixed_clips.front(), one.fixed_clips.back());
}

TEST(RunSweepTest, FixedClipRangeComesFromExtremeQuantiles) {
  SweepSpec spec;
  spec.base = SmallBase();
  spec.server_lr_multipliers = {1.0};
  spec.quantiles = {0.1, 0.9};
  spec.noise_multipliers = {0.0};
  const SweepResult r = RunSweep(spec);
  ASSERT_EQ(r.fixed_clips.size(), 5u);
  auto clips = PostWarmupClips(r.cells[0].records, 0.1);
  if (clips.empty()) clips = {r.cells[0].records.back().clip_after};
  EXPECT_EQ(r.fixed_clips.front(), *std::min_element(clips.begin(), clips.end()));
  clips = PostWarmupClips(r.cells[1].records, 0.9);
  if (clips.empty()) clips = {r.cells[1].records.back().clip_after};
  EXPECT_EQ(r.fixed_clips.back(), *std::max_element(clips.begin(), clips.end()));
}

TEST(RunSweepTest, PartialResultsFlushedOnFailure) {
  SweepSpec spec;
  spec.base = SmallBase();
  spec.base["server_lr"] = 1e300;
  spec.server_lr_multipliers = {1e-300, 1e300};
  spec.quantiles = {0.5};
  spec.noise_multipliers = {0.0};
  spec.fixed_clip_count = 0;
  std::vector<SummaryRow> partial;
  bool flushed = false;
  SweepHooks hooks;
  hooks.on_partial = [&](const std::vector<SummaryRow>& rows) {
    partial = rows;
    flushed = true;
  };
  EXPECT_THROW(RunSweep(spec, hooks), DivergenceError);
  EXPECT_TRUE(flushed);
  EXPECT_EQ(partial.size(), 1u);
}

TEST(RunSweepTest, InfeasibleNoiseIsConfigError) {
  SweepSpec spec;
  spec.base = SmallBase();
  spec.noise_multipliers = {0.0, 50.0};
  EXPECT_THROW(RunSweep(spec), ConfigError);
}

// Frozen desk-scale property: with no noise, the median target is close to
// the best cell of the quantile grid.
TEST(RunSweepTest, MedianNearBestWithoutNoise) {
  SweepSpec spec;
  spec.base = SmallBase();
  spec.base["task"]["num_users"] = 300;
  spec.base["task"]["input_dim"] = 10;
  spec.base["rounds"] = 200;
  spec.base["clients_per_round"] = 30;
  spec.noise_multipliers = {0.0};
  spec.fixed_clip_count = 0;
  spec.workers = 4;
  const SweepResult r = RunSweep(spec);
  double best = 0.0;
  double median = 0.0;
  for (const SummaryRow& row : r.rows) {
    best = std::max(best, row.metric);
    if (row.clip_param == 0.5) median = row.metric;
  }
  EXPECT_GE(median, 0.95 * best);
}

}  // namespace
}  // namespace adaclip
