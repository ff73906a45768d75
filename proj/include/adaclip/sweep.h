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

// Grid experiments over server learning rate, clip setting and noise level.
//
// Adaptive cells run first. Unless fixed clips are given explicitly, the
// fixed-clip grid is then derived from the no-noise adaptive runs: after
// each run's warmup (the first round whose exact unclipped fraction is
// within 0.05 of its target), take the smallest clip seen at the lowest
// quantile and the largest at the highest quantile, and space
// `fixed_clip_count` values logarithmically between them.

#ifndef ADACLIP_SWEEP_H_
#define ADACLIP_SWEEP_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "adaclip/config.h"
#include "adaclip/federation.h"
#include "adaclip/metrics.h"
#include "adaclip/parallel.h"
#include "adaclip/rng.h"

namespace adaclip {

inline constexpr double kWarmupTolerance = 0.05;
inline constexpr double kKneeTolerance = 0.05;
inline constexpr std::size_t kMetricWindow = 100;

inline std::vector<double> DefaultServerLrMultipliers() {
  return {1.0, std::pow(10.0, 0.25), std::pow(10.0, 0.5), std::pow(10.0, 0.75), 10.0};
}
inline std::vector<double> DefaultQuantiles() { return {0.1, 0.3, 0.5, 0.7, 0.9}; }
inline std::vector<double> DefaultNoiseMultipliers() { return {0.0, 0.01, 0.03, 0.1}; }

struct SweepSpec {
  Json base;
  std::vector<double> server_lr_multipliers = DefaultServerLrMultipliers();
  std::vector<double> quantiles = DefaultQuantiles();
  // Explicit fixed clips; when empty, `fixed_clip_count` clips are derived.
  std::vector<double> fixed_clips;
  std::size_t fixed_clip_count = 5;
  std::vector<double> noise_multipliers = DefaultNoiseMultipliers();
  std::size_t workers = 1;
};

inline SweepSpec ParseSweepSpec(const Json& doc) {
  using config_internal::ObjectReader;
  SweepSpec spec;
  ObjectReader r(doc, "", nullptr);
  if (!r.Has("base")) throw ConfigError("base", "required field missing");
  spec.base = doc.at("base");
  if (r.Has("overrides")) {
    const Json& ov = doc.at("overrides");
    if (!ov.is_object()) throw ConfigError("overrides", "expected object of dotted keys");
    for (const auto& [key, value] : ov.items()) ApplyOverride(spec.base, key, value);
  }
  spec.server_lr_multipliers = r.NumberList("server_lr_multipliers", DefaultServerLrMultipliers());
  spec.quantiles = r.NumberList("quantiles", DefaultQuantiles());
  spec.fixed_clips = r.NumberList("fixed_clips", {});
  spec.fixed_clip_count = static_cast<std::size_t>(r.Unsigned("fixed_clip_count", 5));
  spec.noise_multipliers = r.NumberList("noise_multipliers", DefaultNoiseMultipliers());
  spec.workers = static_cast<std::size_t>(r.Unsigned("workers", 1));
  r.Finish();

  auto require = [](bool ok, const char* path, const char* what) {
    if (!ok) throw ConfigError(path, what);
  };
  require(!spec.server_lr_multipliers.empty(), "server_lr_multipliers", "must be non-empty");
  require(!spec.noise_multipliers.empty(), "noise_multipliers", "must be non-empty");
  require(!spec.quantiles.empty() || !spec.fixed_clips.empty(), "quantiles",
          "grid must contain at least one clip setting");
  for (double m : spec.server_lr_multipliers) {
    require(m > 0.0, "server_lr_multipliers", "multipliers must be positive");
  }
  for (double g : spec.quantiles) {
    require(g >= 0.0 && g <= 1.0, "quantiles", "quantiles must lie in [0, 1]");
  }
  for (double c : spec.fixed_clips) require(c > 0.0, "fixed_clips", "clips must be positive");
  for (double z : spec.noise_multipliers) {
    require(z >= 0.0, "noise_multipliers", "noise multipliers must be non-negative");
  }
  require(spec.workers >= 1, "workers", "must be at least 1");
  return spec;
}

struct CellSpec {
  std::size_t index = 0;
  ClipMode mode = ClipMode::kAdaptive;
  // Target quantile (adaptive) or clip norm (fixed).
  double clip_param = 0.0;
  double z = 0.0;
  double lr_multiplier = 1.0;
};

struct CellResult {
  CellSpec cell;
  double server_lr = 0.0;
  double metric = std::numeric_limits<double>::quiet_NaN();
  double final_metric = std::numeric_limits<double>::quiet_NaN();
  std::vector<RoundRecord> records;
};

struct SummaryRow {
  ClipMode mode = ClipMode::kAdaptive;
  double clip_param = 0.0;
  double z = 0.0;
  double best_lr_multiplier = 1.0;
  double server_lr = 0.0;
  // Mean eval metric over the last 100 rounds of the best-LR run.
  double metric = 0.0;
  double final_metric = 0.0;
  std::size_t cell_index = 0;
};

struct KneeReport {
  bool found = false;
  double z_star = 0.0;
  double baseline_metric = 0.0;
  double best_fixed_clip = 0.0;
  double fixed_metric = 0.0;
  double adaptive_quantile = 0.0;
  double adaptive_metric = 0.0;
  // |adaptive - fixed| / |fixed|
  double relative_gap = 0.0;
};

struct SweepResult {
  std::vector<SummaryRow> rows;
  std::vector<double> fixed_clips;
  KneeReport knee;
  std::vector<CellResult> cells;
  bool higher_is_better = true;
};

struct SweepHooks {
  std::function<void(const CellResult&)> on_cell;
  std::function<void(std::string_view)> warn;
  // Called with the rows of completed cells when a cell fails.
  std::function<void(const std::vector<SummaryRow>&)> on_partial;
};

inline std::vector<double> LogSpace(double lo, double hi, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {std::sqrt(lo * hi)};
  std::vector<double> out(count);
  const double ratio = std::log(hi / lo);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

// Clip values applied from the first round whose exact unclipped fraction is
// within `tolerance` of `gamma`; empty if that never happens.
inline std::vector<double> PostWarmupClips(std::span<const RoundRecord> records, double gamma,
                                           double tolerance = kWarmupTolerance) {
  std::vector<double> out;
  bool warmed = false;
  for (const RoundRecord& r : records) {
    if (!warmed && !std::isnan(r.frac_below_exact) &&
        std::abs(r.frac_below_exact - gamma) <= tolerance) {
      warmed = true;
    }
    if (warmed) out.push_back(r.clip_before);
  }
  return out;
}

namespace sweep_internal {

inline bool Better(double a, double b, bool higher_is_better) {
  if (std::isnan(a)) return false;
  if (std::isnan(b)) return true;
  return higher_is_better ? a > b : a < b;
}

inline bool WithinRelative(double value, double reference, double tol, bool higher_is_better) {
  if (std::isnan(value) || std::isnan(reference)) return false;
  return higher_is_better ? value >= reference - tol * std::abs(reference)
                          : value <= reference + tol * std::abs(reference);
}

// Best LR per (mode, clip_param, z); ties keep the smaller multiplier.
inline std::vector<SummaryRow> Summarize(const std::vector<std::optional<CellResult>>& cells,
                                         bool higher_is_better) {
  std::map<std::tuple<int, double, double>, SummaryRow> best;
  std::vector<std::tuple<int, double, double>> order;
  for (const auto& maybe : cells) {
    if (!maybe) continue;
    const CellResult& c = *maybe;
    const auto key = std::make_tuple(static_cast<int>(c.cell.mode), c.cell.clip_param, c.cell.z);
    SummaryRow row{c.cell.mode, c.cell.clip_param, c.cell.z, c.cell.lr_multiplier,
                   c.server_lr,  c.metric,          c.final_metric, c.cell.index};
    auto it = best.find(key);
    if (it == best.end()) {
      best.emplace(key, row);
      order.push_back(key);
      continue;
    }
    SummaryRow& cur = it->second;
    const bool tie = c.metric == cur.metric;
    if (Better(c.metric, cur.metric, higher_is_better) ||
        (tie && c.cell.lr_multiplier < cur.best_lr_multiplier)) {
      cur = row;
    }
  }
  std::vector<SummaryRow> rows;
  rows.reserve(order.size());
  for (const auto& key : order) rows.push_back(best.at(key));
  return rows;
}

}  // namespace sweep_internal

// Largest z (scanning upward from the smallest) whose best metric stays
// within 5% relative of the smallest-z best metric; then the best fixed clip
// at that z against the adaptive run closest to the median.
inline KneeReport FindKnee(const std::vector<SummaryRow>& rows, bool higher_is_better,
                           double tolerance = kKneeTolerance) {
  using sweep_internal::Better;
  KneeReport k;
  std::vector<double> zs;
  for (const SummaryRow& r : rows) zs.push_back(r.z);
  std::sort(zs.begin(), zs.end());
  zs.erase(std::unique(zs.begin(), zs.end()), zs.end());
  if (zs.empty()) return k;

  auto best_at = [&](double z) {
    double best = std::numeric_limits<double>::quiet_NaN();
    for (const SummaryRow& r : rows) {
      if (r.z == z && Better(r.metric, best, higher_is_better)) best = r.metric;
    }
    return best;
  };
  k.baseline_metric = best_at(zs.front());
  k.z_star = zs.front();
  for (double z : zs) {
    if (!sweep_internal::WithinRelative(best_at(z), k.baseline_metric, tolerance,
                                        higher_is_better)) {
      break;
    }
    k.z_star = z;
  }

  bool have_fixed = false;
  bool have_adaptive = false;
  double fixed_best = std::numeric_limits<double>::quiet_NaN();
  for (const SummaryRow& r : rows) {
    if (r.z != k.z_star) continue;
    if (r.mode == ClipMode::kFixed) {
      if (!have_fixed || Better(r.metric, fixed_best, higher_is_better)) {
        fixed_best = r.metric;
        k.best_fixed_clip = r.clip_param;
        have_fixed = true;
      }
    } else if (!have_adaptive ||
               std::abs(r.clip_param - 0.5) < std::abs(k.adaptive_quantile - 0.5)) {
      k.adaptive_quantile = r.clip_param;
      k.adaptive_metric = r.metric;
      have_adaptive = true;
    }
  }
  k.found = have_fixed && have_adaptive;
  if (k.found) {
    k.fixed_metric = fixed_best;
    k.relative_gap = std::abs(k.adaptive_metric - k.fixed_metric) / std::abs(k.fixed_metric);
  }
  return k;
}

inline SweepResult RunSweep(const SweepSpec& spec, const SweepHooks& hooks = {}) {
  const RunConfig base_cfg = ValidateConfig(spec.base);
  const LoadedRun base = LoadRun(base_cfg);
  const std::size_t n = base.data.clients.size();

  SweepResult result;
  result.higher_is_better = HigherIsBetter(base.params.model);

  std::vector<CellSpec> adaptive_cells;
  for (double z : spec.noise_multipliers) {
    for (double gamma : spec.quantiles) {
      for (double m : spec.server_lr_multipliers) {
        adaptive_cells.push_back({adaptive_cells.size(), ClipMode::kAdaptive, gamma, z, m});
      }
    }
  }

  auto params_for = [&](const CellSpec& cell) {
    TrainParams p = base.params;
    p.server_lr = base.params.server_lr * cell.lr_multiplier;
    p.clip.mode = cell.mode;
    if (cell.mode == ClipMode::kAdaptive) {
      p.clip.quantile.target_quantile = cell.clip_param;
    } else {
      p.clip.fixed_clip = cell.clip_param;
    }
    p.z = cell.z;
    p.seed = SaltSeed(base.params.seed, cell.index);
    p.workers = 1;
    return p;
  };

  for (const CellSpec& c : adaptive_cells) {
    try {
      params_for(c).Privacy(n);
    } catch (const CalibrationError& e) {
      throw ConfigError("noise_multipliers", e.what());
    }
  }

  std::vector<std::optional<CellResult>> done;
  auto run_cells = [&](const std::vector<CellSpec>& cells) {
    const std::size_t offset = done.size();
    done.resize(offset + cells.size());
    try {
      ParallelFor(cells.size(), spec.workers, [&](std::size_t i) {
        const CellSpec& cell = cells[i];
        const TrainParams p = params_for(cell);
        TrainResult tr = Train(p, base.data);
        CellResult cr{cell, p.server_lr, MeanMetricLastRounds(tr.records, kMetricWindow),
                      tr.records.empty() ? std::nan("") : tr.records.back().eval_metric,
                      std::move(tr.records)};
        if (hooks.on_cell) hooks.on_cell(cr);
        done[offset + i] = std::move(cr);
      });
    } catch (...) {
      if (hooks.on_partial) {
        hooks.on_partial(sweep_internal::Summarize(done, result.higher_is_better));
      }
      throw;
    }
  };

  run_cells(adaptive_cells);

  // Fixed-clip grid.
  result.fixed_clips = spec.fixed_clips;
  if (result.fixed_clips.empty() && spec.fixed_clip_count > 0 && !spec.quantiles.empty()) {
    const double z0 = *std::min_element(spec.noise_multipliers.begin(),
                                        spec.noise_multipliers.end());
    const double g_lo = *std::min_element(spec.quantiles.begin(), spec.quantiles.end());
    const double g_hi = *std::max_element(spec.quantiles.begin(), spec.quantiles.end());
    const auto rows = sweep_internal::Summarize(done, result.higher_is_better);
    auto clips_for = [&](double gamma) {
      for (const SummaryRow& r : rows) {
        if (r.mode == ClipMode::kAdaptive && r.z == z0 && r.clip_param == gamma) {
          const auto& recs = done[r.cell_index]->records;
          auto clips = PostWarmupClips(recs, gamma);
          if (clips.empty()) {
            if (hooks.warn) {
              hooks.warn("quantile " + FormatDouble(gamma) +
                         " never reached warmup; using its final clip");
            }
            if (!recs.empty()) clips.push_back(recs.back().clip_after);
          }
          return clips;
        }
      }
      return std::vector<double>{};
    };
    const auto lo_clips = clips_for(g_lo);
    const auto hi_clips = clips_for(g_hi);
    if (!lo_clips.empty() && !hi_clips.empty()) {
      double lo = *std::min_element(lo_clips.begin(), lo_clips.end());
      double hi = *std::max_element(hi_clips.begin(), hi_clips.end());
      if (lo > hi) std::swap(lo, hi);
      result.fixed_clips = LogSpace(lo, hi, spec.fixed_clip_count);
    }
  }

  std::vector<CellSpec> fixed_cells;
  for (double z : spec.noise_multipliers) {
    for (double c : result.fixed_clips) {
      for (double m : spec.server_lr_multipliers) {
        fixed_cells.push_back({done.size() + fixed_cells.size(), ClipMode::kFixed, c, z, m});
      }
    }
  }
  run_cells(fixed_cells);

  result.rows = sweep_internal::Summarize(done, result.higher_is_better);
  result.knee = FindKnee(result.rows, result.higher_is_better);
  result.cells.reserve(done.size());
  for (auto& c : done) result.cells.push_back(std::move(*c));
  return result;
}

inline constexpr std::string_view kSummaryHeader =
    "clip_mode,clip_param,z,best_lr_multiplier,server_lr,metric_last100,final_metric,cell";

inline void WriteSummaryCsv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const SummaryRow& r : rows) {
    out << (r.mode == ClipMode::kAdaptive ? "adaptive" : "fixed") << ','
        << FormatMetric(r.clip_param) << ',' << FormatMetric(r.z) << ','
        << FormatMetric(r.best_lr_multiplier) << ',' << FormatMetric(r.server_lr) << ','
        << FormatMetric(r.metric) << ',' << FormatMetric(r.final_metric) << ',' << r.cell_index
        << '\n';
  }
}

}  // namespace adaclip

#endif  // ADACLIP_SWEEP_H_
