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

// adaclip: command-line driver.
//
//   adaclip train --config run.json --out results/
//   adaclip sweep --config sweep.json --out sweep/ --workers 8
//   adaclip account --qn 8550 --n 1000000 --z 0.855 --rounds 1500 --delta 1e-9
//   adaclip quantile-demo --gamma 0.5 --rounds 200
//   adaclip gen-data --num-users 100 --out data.csv
//
// Exit codes: 0 success, 1 configuration or input error, 2 runtime failure
// (divergence).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adaclip/adaclip.h"

namespace fs = std::filesystem;
using namespace adaclip;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

void Warn(std::string_view msg) { std::cerr << "warning: " << msg << '\n'; }

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
}

Json LoadWithOverrides(const std::string& path, const std::vector<std::string>& sets,
                       const std::optional<uint64_t>& seed, const std::optional<std::size_t>& workers,
                       const char* prefix) {
  Json doc = ParseJsonFile(path);
  for (const std::string& s : sets) ApplyOverride(doc, std::string(prefix) + s);
  if (seed) ApplyOverride(doc, std::string(prefix) + "seed", *seed);
  if (workers) ApplyOverride(doc, std::string(prefix) + "workers", *workers);
  return doc;
}

struct CommonOptions {
  std::string config;
  std::string out = ".";
  std::vector<std::string> sets;
  std::optional<uint64_t> seed;
  std::optional<std::size_t> workers;
};

void AddCommon(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "JSON config file")->required()->check(CLI::ExistingFile);
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--set", o.sets, "Override a config field: dotted.key=value (repeatable)");
  app->add_option("--seed", o.seed, "Master seed (overrides config)");
  app->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
}

int RunTrain(const CommonOptions& o) {
  const Json doc = LoadWithOverrides(o.config, o.sets, o.seed, o.workers, "");
  const RunConfig cfg = ValidateConfig(doc);
  const LoadedRun run = LoadRun(cfg);
  for (const std::string& d : cfg.defaulted) std::cerr << "default: " << d << '\n';

  EnsureDir(o.out);
  const Json echo = ConfigEcho(cfg, run);
  const Json resolved = ResolvedSummary(cfg, run);
  {
    std::ofstream out = OpenForWrite((fs::path(o.out) / "config.resolved.json").string());
    out << echo.dump(2) << '\n';
  }

  TrainHooks hooks;
  hooks.warn = Warn;
  const TrainResult result = Train(run.params, run.data, hooks);
  WriteMetricsCsvFile((fs::path(o.out) / "metrics.csv").string(), result.records);
  WriteMetricsJsonFile((fs::path(o.out) / "metrics.json").string(), result.records, echo,
                       resolved);

  std::cout << "rounds: " << result.records.size() << "  users: " << run.data.clients.size()
            << "  q: " << run.privacy.q << "  z: " << run.privacy.z
            << "  z_delta: " << run.privacy.z_delta << "  sigma_b: " << run.privacy.sigma_b
            << '\n';
  if (!result.records.empty()) {
    const RoundRecord& last = result.records.back();
    std::cout << "final clip: " << last.clip_after << "  eval_loss: " << last.eval_loss
              << "  eval_metric: " << last.eval_metric
              << "  metric(last " << kMetricWindow
              << "): " << MeanMetricLastRounds(result.records, kMetricWindow) << '\n';
  }
  return 0;
}

int RunSweepCommand(const CommonOptions& o) {
  Json doc = ParseJsonFile(o.config);
  for (const std::string& s : o.sets) ApplyOverride(doc, s);
  if (o.seed) ApplyOverride(doc, "base.seed", *o.seed);
  SweepSpec spec = ParseSweepSpec(doc);
  if (o.workers) spec.workers = *o.workers;

  EnsureDir(o.out);
  const fs::path cells_dir = fs::path(o.out) / "cells";
  EnsureDir(cells_dir.string());
  const fs::path summary_path = fs::path(o.out) / "summary.csv";

  SweepHooks hooks;
  hooks.warn = Warn;
  hooks.on_cell = [&](const CellResult& c) {
    char name[32];
    std::snprintf(name, sizeof(name), "cell_%04zu.csv", c.cell.index);
    WriteMetricsCsvFile((cells_dir / name).string(), c.records);
  };
  hooks.on_partial = [&](const std::vector<SummaryRow>& rows) {
    std::ofstream out = OpenForWrite(summary_path.string());
    WriteSummaryCsv(out, rows);
  };

  const SweepResult result = RunSweep(spec, hooks);
  {
    std::ofstream out = OpenForWrite(summary_path.string());
    WriteSummaryCsv(out, result.rows);
  }
  Json cells = Json::array();
  for (const CellResult& c : result.cells) {
    cells.push_back({{"index", c.cell.index},
                     {"clip_mode", c.cell.mode == ClipMode::kAdaptive ? "adaptive" : "fixed"},
                     {"clip_param", c.cell.clip_param},
                     {"z", c.cell.z},
                     {"lr_multiplier", c.cell.lr_multiplier},
                     {"server_lr", c.server_lr},
                     {"metric", MetricJson(c.metric)}});
  }
  const KneeReport& k = result.knee;
  Json report = {{"fixed_clips", result.fixed_clips},
                 {"higher_is_better", result.higher_is_better},
                 {"knee",
                  {{"found", k.found},
                   {"z_star", k.z_star},
                   {"baseline_metric", MetricJson(k.baseline_metric)},
                   {"best_fixed_clip", k.best_fixed_clip},
                   {"fixed_metric", MetricJson(k.fixed_metric)},
                   {"adaptive_quantile", k.adaptive_quantile},
                   {"adaptive_metric", MetricJson(k.adaptive_metric)},
                   {"relative_gap", MetricJson(k.relative_gap)}}},
                 {"cells", cells},
                 {"base", spec.base}};
  {
    std::ofstream out = OpenForWrite((fs::path(o.out) / "sweep.json").string());
    out << report.dump(2) << '\n';
  }

  WriteSummaryCsv(std::cout, result.rows);
  if (k.found) {
    std::cout << "knee z*=" << k.z_star << "  best fixed C*=" << k.best_fixed_clip << " ("
              << k.fixed_metric << ")  adaptive gamma=" << k.adaptive_quantile << " ("
              << k.adaptive_metric << ")  relative gap=" << k.relative_gap << '\n';
  }
  return 0;
}

struct AccountOptions {
  std::optional<double> q;
  std::optional<double> qn;
  std::optional<double> n;
  std::optional<double> z;
  int64_t rounds = 1;
  double delta = 1e-9;
  bool solve_z = false;
  std::optional<double> epsilon;
  bool json = false;
  std::string conversion = "improved";
};

int RunAccount(const AccountOptions& o) {
  double q;
  if (o.q) {
    q = *o.q;
  } else if (o.qn && o.n) {
    q = *o.qn / *o.n;
  } else {
    throw ConfigError("q", "pass --q, or both --qn and --n");
  }
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("q", "must lie in (0, 1]");
  const Conversion conv =
      o.conversion == "classic" ? Conversion::kClassic : Conversion::kImproved;

  double z;
  if (o.solve_z) {
    if (!o.epsilon) throw ConfigError("epsilon", "--solve-z requires --epsilon");
    z = SolveNoiseForEpsilon(q, o.rounds, o.delta, *o.epsilon, conv);
  } else {
    if (!o.z) throw ConfigError("z", "pass --z or use --solve-z");
    z = *o.z;
  }
  const EpsilonResult r = ComposeAndConvert(q, z, o.rounds, o.delta, conv);
  if (o.json) {
    Json out = {{"q", q},           {"z", z},
                {"rounds", o.rounds}, {"delta", o.delta},
                {"epsilon", r.epsilon}, {"order", r.order},
                {"conversion", o.conversion}};
    if (o.solve_z) out["target_epsilon"] = *o.epsilon;
    std::cout << out.dump(2) << '\n';
  } else {
    std::cout << "q=" << q << " z=" << z << " T=" << o.rounds << " delta=" << o.delta
              << "\nepsilon=" << r.epsilon << " (order " << r.order << ")\n";
  }
  return 0;
}

struct DemoOptions {
  double gamma = 0.5;
  int64_t rounds = 200;
  std::size_t samples = 100;
  double sigma_log = 1.5;
  double mu_log = 0.0;
  double clip_lr = kDefaultClipLearningRate;
  double initial_clip = kDefaultInitialClip;
  std::string rule = "geometric";
  double count_noise = 0.0;
  uint64_t seed = 0;
};

// Tracks a quantile of i.i.d. lognormal samples and prints one CSV row per
// round: the estimate, the batch fraction below it and the true population
// fraction below it.
int RunQuantileDemo(const DemoOptions& o) {
  QuantileConfig cfg{o.gamma, o.clip_lr, o.initial_clip,
                     o.rule == "linear" ? UpdateRule::kLinear : UpdateRule::kGeometric};
  cfg.Validate();
  ClipState state = ClipState::Initial(cfg);
  std::cout << "round,clip,frac_below,frac_below_noisy,population_frac_below\n";
  std::vector<double> batch(o.samples);
  for (int64_t t = 0; t < o.rounds; ++t) {
    RngStream rng(o.seed, StreamLabel::kDataGen, static_cast<uint32_t>(t));
    for (double& x : batch) x = std::exp(o.mu_log + o.sigma_log * rng.Gaussian());
    const double frac = FractionBelow(batch, state.clip);
    RngStream noise(o.seed, StreamLabel::kCountNoise, static_cast<uint32_t>(t));
    const double noisy =
        frac + (o.count_noise > 0.0 ? o.count_noise * noise.Gaussian() / batch.size() : 0.0);
    const double pop =
        0.5 * std::erfc(-(std::log(state.clip) - o.mu_log) / (o.sigma_log * std::sqrt(2.0)));
    std::cout << t << ',' << FormatDouble(state.clip) << ',' << FormatDouble(frac) << ','
              << FormatDouble(noisy) << ',' << FormatDouble(pop) << '\n';
    state = UpdateClip(state, noisy, cfg);
  }
  return 0;
}

struct GenOptions {
  SyntheticTaskSpec spec;
  std::string label = "binary";
  uint64_t seed = 0;
  std::string out;
  std::string user_column = "user";
  std::string target_column = "target";
};

int RunGenData(GenOptions o) {
  o.spec.kind = o.label == "regression" ? TaskKind::kRegression : TaskKind::kBinary;
  const auto clients = GenerateSyntheticTask(o.seed, o.spec);
  const fs::path parent = fs::path(o.out).parent_path();
  if (!parent.empty()) EnsureDir(parent.string());
  WriteCsvFile(o.out, clients, o.user_column, o.target_column);
  std::size_t rows = 0;
  for (const auto& c : clients) rows += c.examples.size();
  std::cout << "wrote " << rows << " rows for " << clients.size() << " users to " << o.out
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated averaging with differentially private adaptive clipping"};
  app.require_subcommand(1);

  CommonOptions train_opts;
  CLI::App* train = app.add_subcommand("train", "Run one training job");
  AddCommon(train, train_opts);

  CommonOptions sweep_opts;
  CLI::App* sweep = app.add_subcommand("sweep", "Run a server-LR x clip x noise grid");
  AddCommon(sweep, sweep_opts);

  AccountOptions acc;
  CLI::App* account = app.add_subcommand("account", "Privacy accounting");
  account->add_option("--q", acc.q, "Sampling probability");
  account->add_option("--qn", acc.qn, "Expected clients per round");
  account->add_option("--n", acc.n, "Population size");
  account->add_option("--z", acc.z, "Noise multiplier");
  account->add_option("--rounds,-T", acc.rounds, "Number of rounds")->check(CLI::NonNegativeNumber);
  account->add_option("--delta", acc.delta, "Target delta");
  account->add_flag("--solve-z", acc.solve_z, "Find the smallest z reaching --epsilon");
  account->add_option("--epsilon", acc.epsilon, "Target epsilon for --solve-z");
  account->add_flag("--json", acc.json, "JSON output");
  account->add_option("--conversion", acc.conversion, "RDP to (eps, delta) conversion")
      ->check(CLI::IsMember({"improved", "classic"}));

  DemoOptions demo;
  CLI::App* qdemo = app.add_subcommand("quantile-demo", "Track a quantile of a lognormal stream");
  qdemo->add_option("--gamma", demo.gamma, "Target quantile");
  qdemo->add_option("--rounds", demo.rounds, "Rounds");
  qdemo->add_option("--samples", demo.samples, "Samples per round")->check(CLI::PositiveNumber);
  qdemo->add_option("--sigma-log", demo.sigma_log, "Lognormal sigma");
  qdemo->add_option("--mu-log", demo.mu_log, "Lognormal mu");
  qdemo->add_option("--clip-lr", demo.clip_lr, "Clip learning rate");
  qdemo->add_option("--initial-clip", demo.initial_clip, "Initial estimate");
  qdemo->add_option("--rule", demo.rule, "Update rule")
      ->check(CLI::IsMember({"geometric", "linear"}));
  qdemo->add_option("--count-noise", demo.count_noise, "Stddev of noise on the below-count");
  qdemo->add_option("--seed", demo.seed, "Seed");

  GenOptions gen;
  CLI::App* gendata = app.add_subcommand("gen-data", "Write a synthetic federated task as CSV");
  gendata->add_option("--num-users", gen.spec.num_users, "Users");
  gendata->add_option("--min-examples", gen.spec.min_examples, "Minimum examples per user");
  gendata->add_option("--max-examples", gen.spec.max_examples, "Maximum examples per user");
  gendata->add_option("--spread", gen.spec.spread, "User scale spread (>= 1)");
  gendata->add_option("--input-dim", gen.spec.input_dim, "Feature dimension");
  gendata->add_option("--label", gen.label, "Task type")
      ->check(CLI::IsMember({"binary", "regression"}));
  gendata->add_option("--seed", gen.seed, "Seed");
  gendata->add_option("--user-column", gen.user_column, "User column name");
  gendata->add_option("--target-column", gen.target_column, "Target column name");
  gendata->add_option("--out", gen.out, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) return RunTrain(train_opts);
    if (*sweep) return RunSweepCommand(sweep_opts);
    if (*account) return RunAccount(acc);
    if (*qdemo) return RunQuantileDemo(demo);
    if (*gendata) return RunGenData(gen);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IngestError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CalibrationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const AccountingError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
