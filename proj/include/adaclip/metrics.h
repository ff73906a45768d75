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

// Per-round metrics sinks: CSV (17 significant digits, round-trippable)
// and a JSON mirror that carries the run-config echo.

#ifndef ADACLIP_METRICS_H_
#define ADACLIP_METRICS_H_

#include <cmath>
#include <cstddef>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "json.hpp"

#include "adaclip/dataset.h"
#include "adaclip/errors.h"
#include "adaclip/federation.h"

namespace adaclip {

inline constexpr std::string_view kMetricsHeader =
    "round,clip_before,clip_after,frac_below_exact,frac_below_noisy,mean_preclip_norm,"
    "eval_loss,eval_metric,sampled_count";

inline std::string FormatMetric(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return FormatDouble(v);
}

inline void WriteMetricsCsv(std::ostream& out, std::span<const RoundRecord> records) {
  out << kMetricsHeader << '\n';
  for (const RoundRecord& r : records) {
    out << r.round << ',' << FormatMetric(r.clip_before) << ',' << FormatMetric(r.clip_after)
        << ',' << FormatMetric(r.frac_below_exact) << ',' << FormatMetric(r.frac_below_noisy)
        << ',' << FormatMetric(r.mean_preclip_norm) << ',' << FormatMetric(r.eval_loss) << ','
        << FormatMetric(r.eval_metric) << ',' << r.sampled_count << '\n';
  }
}

inline nlohmann::json MetricJson(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline nlohmann::json RecordsJson(std::span<const RoundRecord> records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const RoundRecord& r : records) {
    arr.push_back({{"round", r.round},
                   {"clip_before", MetricJson(r.clip_before)},
                   {"clip_after", MetricJson(r.clip_after)},
                   {"frac_below_exact", MetricJson(r.frac_below_exact)},
                   {"frac_below_noisy", MetricJson(r.frac_below_noisy)},
                   {"mean_preclip_norm", MetricJson(r.mean_preclip_norm)},
                   {"eval_loss", MetricJson(r.eval_loss)},
                   {"eval_metric", MetricJson(r.eval_metric)},
                   {"sampled_count", r.sampled_count}});
  }
  return arr;
}

// {"config": <echo>, "resolved": <derived values>, "records": [...]}
inline void WriteMetricsJson(std::ostream& out, std::span<const RoundRecord> records,
                             const nlohmann::json& config_echo,
                             const nlohmann::json& resolved) {
  nlohmann::json doc = {{"config", config_echo},
                        {"resolved", resolved},
                        {"records", RecordsJson(records)}};
  out << doc.dump(2) << '\n';
}

inline std::ofstream OpenForWrite(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

inline void WriteMetricsCsvFile(const std::string& path, std::span<const RoundRecord> records) {
  std::ofstream out = OpenForWrite(path);
  WriteMetricsCsv(out, records);
  if (!out) throw Error("failed writing '" + path + "'");
}

inline void WriteMetricsJsonFile(const std::string& path, std::span<const RoundRecord> records,
                                 const nlohmann::json& config_echo,
                                 const nlohmann::json& resolved) {
  std::ofstream out = OpenForWrite(path);
  WriteMetricsJson(out, records, config_echo, resolved);
  if (!out) throw Error("failed writing '" + path + "'");
}

// Mean of the evaluated metric over the last `window` rounds (clamped to
// the run length). Rounds without an evaluation are skipped; NaN if none.
inline double MeanMetricLastRounds(std::span<const RoundRecord> records, std::size_t window = 100) {
  const std::size_t start = records.size() > window ? records.size() - window : 0;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = start; i < records.size(); ++i) {
    if (std::isnan(records[i].eval_metric)) continue;
    sum += records[i].eval_metric;
    ++count;
  }
  return count == 0 ? std::nan("") : sum / static_cast<double>(count);
}

}  // namespace adaclip

#endif  // ADACLIP_METRICS_H_
