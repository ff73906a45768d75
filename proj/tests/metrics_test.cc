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

#include "adaclip/metrics.h"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"

namespace adaclip {
namespace {

TEST(WriteMetricsCsvTest, EmptyIsHeaderOnly) {
  std::ostringstream out;
  WriteMetricsCsv(out, std::vector<RoundRecord>{});
  EXPECT_EQ(out.str(),
            "round,clip_before,clip_after,frac_below_exact,frac_below_noisy,mean_preclip_norm,"
            "eval_loss,eval_metric,sampled_count\n");
}

TEST(WriteMetricsCsvTest, OneRecordRoundTrips) {
  RoundRecord r;
  r.round = 3;
  r.clip_before = 0.1;
  r.clip_after = 1.0 / 3.0;
  r.frac_below_exact = 0.25;
  r.frac_below_noisy = -0.0123456789012345678;
  r.mean_preclip_norm = 12.5;
  r.sampled_count = 97;
  std::ostringstream out;
  WriteMetricsCsv(out, std::vector<RoundRecord>{r});
  std::istringstream in(out.str());
  std::string header, line, extra;
  std::getline(in, header);
  std::getline(in, line);
  EXPECT_FALSE(std::getline(in, extra));
  EXPECT_EQ(line,
            "3,0.10000000000000001,0.33333333333333331,0.25,-0.012345678901234568,12.5,nan,nan,97");
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  EXPECT_EQ(std::stod(cells[2]), r.clip_after);
  EXPECT_EQ(std::stod(cells[4]), r.frac_below_noisy);
}

TEST(MetricsJsonTest, NaNBecomesNull) {
  RoundRecord r;
  r.eval_metric = 0.75;
  const nlohmann::json j = RecordsJson(std::vector<RoundRecord>{r});
  EXPECT_TRUE(j[0]["eval_loss"].is_null());
  EXPECT_EQ(j[0]["eval_metric"], 0.75);
  std::ostringstream out;
  WriteMetricsJson(out, std::vector<RoundRecord>{r}, {{"seed", 1}}, {{"z_delta", 1.005}});
  const nlohmann::json doc = nlohmann::json::parse(out.str());
  EXPECT_EQ(doc["config"]["seed"], 1);
  EXPECT_EQ(doc["resolved"]["z_delta"], 1.005);
  EXPECT_EQ(doc["records"].size(), 1u);
}

TEST(WriteMetricsCsvFileTest, UnwritablePath) {
  EXPECT_THROW(WriteMetricsCsvFile("/nonexistent-dir/metrics.csv", {}), Error);
}

TEST(MeanMetricLastRoundsTest, WindowClampsAndSkipsGaps) {
  std::vector<RoundRecord> records(150);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].eval_metric = i % 2 == 0 ? static_cast<double>(i) : kNaN;
  }
  // Even rounds 50..148: mean 99.
  EXPECT_EQ(MeanMetricLastRounds(records), 99.0);
  records.resize(10);
  EXPECT_EQ(MeanMetricLastRounds(records), 4.0);
  EXPECT_TRUE(std::isnan(MeanMetricLastRounds(std::vector<RoundRecord>{})));
}

}  // namespace
}  // namespace adaclip
