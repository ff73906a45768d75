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

// Run configuration: a single JSON document, validated field by field.
//
//   {
//     "task":  {"source": "synthetic", "num_users": 1000, ...}
//              | {"source": "csv", "path": "...", "user_column": "...", ...},
//     "model": {"kind": "logistic_regression" | "linear_regression" | "mlp", ...},
//     "rounds": 500,
//     "clients_per_round": 100,            // or "q"
//     "client_lr": 0.1, "server_lr": 1.0, "momentum": 0.9,
//     "local_epochs": 1, "batch_size": 16,
//     "clip": {"mode": "adaptive", "target_quantile": 0.5, "clip_lr": 0.2,
//              "initial_clip": 0.1, "rule": "geometric"}
//           | {"mode": "fixed", "clip": 1.0},
//     "noise_multiplier": 0.0, "count_noise_stddev": <qn/20>,
//     "seed": 0, "eval_period": 1, "workers": 1
//   }

#ifndef ADACLIP_CONFIG_H_
#define ADACLIP_CONFIG_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "adaclip/dataset.h"
#include "adaclip/errors.h"
#include "adaclip/federation.h"
#include "adaclip/model.h"
#include "adaclip/privacy_calibration.h"
#include "adaclip/quantile_tracker.h"

namespace adaclip {

using Json = nlohmann::json;

inline constexpr double kDefaultClientsPerRound = 100.0;
inline constexpr double kDefaultMomentum = 0.9;
inline constexpr double kDefaultHoldoutFraction = 0.2;

enum class TaskSource { kSynthetic, kCsv };

struct TaskConfig {
  TaskSource source = TaskSource::kSynthetic;
  SyntheticTaskSpec synthetic;
  std::string path;
  std::string user_column = "user";
  std::string target_column = "target";
  double holdout_fraction = kDefaultHoldoutFraction;
  uint64_t seed = 0;
};

struct RunConfig {
  TaskConfig task;
  TrainParams train;
  // When set, q is resolved to min(1, clients_per_round / n) once the
  // population size is known.
  std::optional<double> clients_per_round;
  // Dotted paths of fields filled from defaults.
  std::vector<std::string> defaulted;
};

namespace config_internal {

inline std::string TypeName(const Json& j) { return j.type_name(); }

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& obj, std::string path, std::vector<std::string>* defaulted)
      : obj_(obj), path_(std::move(path)), defaulted_(defaulted) {
    if (!obj_.is_object()) {
      throw ConfigError(path_, "expected object, got " + TypeName(obj_));
    }
  }

  std::string Path(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  bool Has(std::string_view key) {
    seen_.insert(std::string(key));
    return obj_.contains(key);
  }

  double Number(std::string_view key, std::optional<double> fallback = std::nullopt) {
    if (!Has(key)) return Default(key, fallback);
    const Json& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(Path(key), "expected number, got " + TypeName(v));
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(Path(key), "must be finite");
    return d;
  }

  uint64_t Unsigned(std::string_view key, std::optional<uint64_t> fallback = std::nullopt) {
    if (!Has(key)) return Default(key, fallback);
    const Json& v = obj_.at(key);
    if (v.is_number_unsigned()) return v.get<uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<int64_t>() < 0) throw ConfigError(Path(key), "must be non-negative");
      return static_cast<uint64_t>(v.get<int64_t>());
    }
    throw ConfigError(Path(key), "expected non-negative integer, got " + TypeName(v));
  }

  int64_t Integer(std::string_view key, std::optional<int64_t> fallback = std::nullopt) {
    if (!Has(key)) return Default(key, fallback);
    const Json& v = obj_.at(key);
    if (!v.is_number_integer()) {
      throw ConfigError(Path(key), "expected integer, got " + TypeName(v));
    }
    return v.get<int64_t>();
  }

  std::string String(std::string_view key, std::optional<std::string> fallback = std::nullopt) {
    if (!Has(key)) return Default(key, std::move(fallback));
    const Json& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(Path(key), "expected string, got " + TypeName(v));
    return v.get<std::string>();
  }

  std::vector<double> NumberList(std::string_view key, std::vector<double> fallback) {
    if (!Has(key)) {
      MarkDefault(key);
      return fallback;
    }
    const Json& v = obj_.at(key);
    if (!v.is_array()) throw ConfigError(Path(key), "expected array, got " + TypeName(v));
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        throw ConfigError(Path(key) + "[" + std::to_string(i) + "]",
                          "expected number, got " + TypeName(v[i]));
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  // Child object; an absent key yields an empty object.
  ObjectReader Child(std::string_view key, bool required = false) {
    if (!Has(key)) {
      if (required) throw ConfigError(Path(key), "required field missing");
      return ObjectReader(Empty(), Path(key), defaulted_);
    }
    return ObjectReader(obj_.at(key), Path(key), defaulted_);
  }

  void Finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) throw ConfigError(Path(key), "unknown key");
    }
  }

 private:
  static const Json& Empty() {
    static const Json empty = Json::object();
    return empty;
  }

  void MarkDefault(std::string_view key) {
    if (defaulted_ != nullptr) defaulted_->push_back(Path(key));
  }

  template <typename T>
  T Default(std::string_view key, std::optional<T> fallback) {
    if (!fallback) throw ConfigError(Path(key), "required field missing");
    MarkDefault(key);
    return *std::move(fallback);
  }

  const Json& obj_;
  std::string path_;
  std::vector<std::string>* defaulted_;
  std::set<std::string, std::less<>> seen_;
};

template <typename Enum>
Enum ParseEnum(ObjectReader& r, std::string_view key,
               std::initializer_list<std::pair<std::string_view, Enum>> choices,
               std::optional<std::string> fallback) {
  const std::string s = r.String(key, std::move(fallback));
  for (const auto& [name, value] : choices) {
    if (s == name) return value;
  }
  std::string allowed;
  for (const auto& [name, value] : choices) {
    allowed += (allowed.empty() ? "" : ", ") + std::string(name);
  }
  throw ConfigError(r.Path(key), "unknown value '" + s + "' (expected one of: " + allowed + ")");
}

inline std::size_t PositiveSize(ObjectReader& r, std::string_view key,
                                std::optional<uint64_t> fallback) {
  const uint64_t v = r.Unsigned(key, fallback);
  if (v == 0) throw ConfigError(r.Path(key), "must be positive");
  return static_cast<std::size_t>(v);
}

}  // namespace config_internal

// Resolved q for a population of `n` users.
inline double ResolveQ(const RunConfig& cfg, std::size_t n) {
  if (!cfg.clients_per_round) return cfg.train.q;
  return std::min(1.0, *cfg.clients_per_round / static_cast<double>(n));
}

// Checks the (z, sigma_b) split for a population of `n` users.
inline PrivacyParams CheckCalibration(const RunConfig& cfg, std::size_t n) {
  TrainParams p = cfg.train;
  p.q = ResolveQ(cfg, n);
  try {
    return p.Privacy(n);
  } catch (const CalibrationError& e) {
    throw ConfigError("noise_multiplier", e.what());
  }
}

inline RunConfig ValidateConfig(const Json& doc) {
  using namespace config_internal;
  RunConfig cfg;
  ObjectReader root(doc, "", &cfg.defaulted);
  const uint64_t seed = root.Unsigned("seed", 0);

  // task
  {
    ObjectReader t = root.Child("task", /*required=*/true);
    TaskConfig& task = cfg.task;
    task.source = ParseEnum<TaskSource>(
        t, "source", {{"synthetic", TaskSource::kSynthetic}, {"csv", TaskSource::kCsv}},
        "synthetic");
    task.holdout_fraction = t.Number("holdout_fraction", kDefaultHoldoutFraction);
    if (!(task.holdout_fraction >= 0.0 && task.holdout_fraction < 1.0)) {
      throw ConfigError(t.Path("holdout_fraction"), "must lie in [0, 1)");
    }
    const std::size_t batch = PositiveSize(root, "batch_size", kDefaultBatchSize);
    if (task.source == TaskSource::kSynthetic) {
      SyntheticTaskSpec& s = task.synthetic;
      s.num_users = PositiveSize(t, "num_users", 1000);
      s.min_examples = PositiveSize(t, "min_examples", 10);
      s.max_examples = PositiveSize(t, "max_examples", std::max<uint64_t>(40, s.min_examples));
      s.spread = t.Number("spread", 10.0);
      s.input_dim = PositiveSize(t, "input_dim", 10);
      s.kind = ParseEnum<TaskKind>(
          t, "label", {{"binary", TaskKind::kBinary}, {"regression", TaskKind::kRegression}},
          "binary");
      s.user_weight_stddev = t.Number("user_weight_stddev", 0.5);
      s.target_noise = t.Number("target_noise", 0.1);
      s.batch_size = batch;
      s.Validate();
    } else {
      task.path = t.String("path");
      task.user_column = t.String("user_column", std::string("user"));
      task.target_column = t.String("target_column", std::string("target"));
      task.synthetic.batch_size = batch;
    }
    task.seed = t.Unsigned("seed", seed);
    t.Finish();
  }

  TrainParams& p = cfg.train;
  p.seed = seed;

  // model
  {
    ObjectReader m = root.Child("model", /*required=*/true);
    ModelSpec& spec = p.model;
    spec.kind = ParseEnum<ModelKind>(m, "kind",
                                     {{"linear_regression", ModelKind::kLinearRegression},
                                      {"logistic_regression", ModelKind::kLogisticRegression},
                                      {"mlp", ModelKind::kMlp}},
                                     std::nullopt);
    const bool regression_task = cfg.task.source == TaskSource::kSynthetic &&
                                 cfg.task.synthetic.kind == TaskKind::kRegression;
    std::string default_loss = "cross_entropy";
    if (spec.kind == ModelKind::kLinearRegression ||
        (spec.kind == ModelKind::kMlp && regression_task)) {
      default_loss = "squared_error";
    }
    spec.loss = ParseEnum<LossKind>(m, "loss",
                                    {{"squared_error", LossKind::kSquaredError},
                                     {"cross_entropy", LossKind::kCrossEntropy}},
                                    default_loss);
    // 0 means "infer from the data".
    spec.input_dim = static_cast<std::size_t>(
        m.Unsigned("input_dim", cfg.task.source == TaskSource::kSynthetic
                                    ? cfg.task.synthetic.input_dim
                                    : 0));
    spec.output_dim = PositiveSize(m, "output_dim", 1);
    spec.hidden_dim = spec.kind == ModelKind::kMlp ? PositiveSize(m, "hidden_dim", 16) : 0;
    m.Finish();
    if (spec.input_dim != 0) {
      spec.Validate();
    } else {
      ModelSpec probe = spec;
      probe.input_dim = 1;
      probe.Validate();
    }
  }

  const int64_t rounds = root.Integer("rounds");
  if (rounds < 0) throw ConfigError("rounds", "must be non-negative");
  p.rounds = rounds;

  const bool has_q = root.Has("q");
  const bool has_cpr = root.Has("clients_per_round");
  if (has_q && has_cpr) {
    throw ConfigError("q", "set either q or clients_per_round, not both");
  }
  if (has_q) {
    p.q = root.Number("q");
    if (!(p.q > 0.0 && p.q <= 1.0)) throw ConfigError("q", "must lie in (0, 1]");
  } else {
    const double cpr = root.Number("clients_per_round", kDefaultClientsPerRound);
    if (!(cpr > 0.0)) throw ConfigError("clients_per_round", "must be positive");
    cfg.clients_per_round = cpr;
  }

  p.client_lr = root.Number("client_lr", 0.1);
  if (!(p.client_lr > 0.0)) throw ConfigError("client_lr", "must be positive");
  p.server_lr = root.Number("server_lr", 1.0);
  if (!(p.server_lr > 0.0)) throw ConfigError("server_lr", "must be positive");
  p.beta = root.Number("momentum", kDefaultMomentum);
  if (!(p.beta >= 0.0 && p.beta < 1.0)) throw ConfigError("momentum", "must lie in [0, 1)");
  const int64_t epochs = root.Integer("local_epochs", 1);
  if (epochs < 1) throw ConfigError("local_epochs", "must be at least 1");
  p.local_epochs = static_cast<int>(epochs);

  // clip
  {
    ObjectReader c = root.Child("clip");
    p.clip.mode = ParseEnum<ClipMode>(
        c, "mode", {{"adaptive", ClipMode::kAdaptive}, {"fixed", ClipMode::kFixed}}, "adaptive");
    if (p.clip.mode == ClipMode::kFixed) {
      p.clip.fixed_clip = c.Number("clip");
      if (!(p.clip.fixed_clip > 0.0)) throw ConfigError(c.Path("clip"), "must be positive");
    } else {
      QuantileConfig& qc = p.clip.quantile;
      qc.target_quantile = c.Number("target_quantile", 0.5);
      qc.clip_learning_rate = c.Number("clip_lr", kDefaultClipLearningRate);
      qc.initial_clip = c.Number("initial_clip", kDefaultInitialClip);
      qc.rule = ParseEnum<UpdateRule>(
          c, "rule", {{"geometric", UpdateRule::kGeometric}, {"linear", UpdateRule::kLinear}},
          "geometric");
      try {
        qc.Validate();
      } catch (const ConfigError& e) {
        throw ConfigError(c.Path(e.path()), e.message());
      }
    }
    c.Finish();
  }

  p.z = root.Number("noise_multiplier", 0.0);
  if (p.z < 0.0) throw ConfigError("noise_multiplier", "must be non-negative");
  if (root.Has("count_noise_stddev")) {
    p.sigma_b = root.Number("count_noise_stddev");
    if (p.sigma_b < 0.0) throw ConfigError("count_noise_stddev", "must be non-negative");
  } else {
    cfg.defaulted.push_back("count_noise_stddev");
    p.sigma_b = -1.0;
  }
  p.eval_period = root.Integer("eval_period", 1);
  if (p.eval_period < 1) throw ConfigError("eval_period", "must be at least 1");
  p.workers = PositiveSize(root, "workers", 1);
  root.Finish();

  if (cfg.task.source == TaskSource::kSynthetic) {
    CheckCalibration(cfg, cfg.task.synthetic.num_users);
  }
  return cfg;
}

inline Json ParseJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", "invalid JSON in '" + path + "': " + e.what());
  }
}

// Sets `dotted` (e.g. "clip.target_quantile") in `doc`, creating
// intermediate objects as needed.
inline void ApplyOverride(Json& doc, std::string_view dotted, const Json& value) {
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key(dotted.substr(start, dot == std::string_view::npos ? dotted.npos
                                                                            : dot - start));
    if (key.empty()) throw ConfigError(std::string(dotted), "empty path component");
    if (!node->is_object()) {
      throw ConfigError(std::string(dotted), "cannot descend into a non-object");
    }
    if (dot == std::string_view::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

// "key=value" with value parsed as JSON when possible, else as a string.
inline void ApplyOverride(Json& doc, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(std::string(assignment), "override must have the form key=value");
  }
  const std::string raw(assignment.substr(eq + 1));
  Json value = Json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;
  ApplyOverride(doc, assignment.substr(0, eq), value);
}

struct LoadedRun {
  TrainParams params;  // q and input_dim resolved
  FederatedData data;
  PrivacyParams privacy;
};

// Builds the client datasets and resolves everything that depends on them.
inline LoadedRun LoadRun(const RunConfig& cfg) {
  LoadedRun run;
  const TaskConfig& task = cfg.task;
  if (task.source == TaskSource::kSynthetic) {
    run.data.clients = GenerateSyntheticTask(task.seed, task.synthetic);
  } else {
    run.data.clients =
        IngestCsvFile(task.path, task.user_column, task.target_column, task.synthetic.batch_size);
  }
  run.data.eval = SplitHoldout(run.data.clients, task.holdout_fraction);

  run.params = cfg.train;
  const std::size_t d = run.data.clients.front().examples.front().features.size();
  if (run.params.model.input_dim == 0) run.params.model.input_dim = d;
  if (run.params.model.input_dim != d) {
    throw ConfigError("model.input_dim", "does not match data feature dimension " +
                                             std::to_string(d));
  }
  run.params.model.Validate();
  const std::size_t n = run.data.clients.size();
  run.params.q = ResolveQ(cfg, n);
  run.privacy = CheckCalibration(cfg, n);
  run.params.sigma_b = run.privacy.sigma_b;
  return run;
}

// Fully explicit config that reproduces `run` when fed back to
// ValidateConfig.
inline Json ConfigEcho(const RunConfig& cfg, const LoadedRun& run) {
  const TrainParams& p = run.params;
  Json task;
  if (cfg.task.source == TaskSource::kSynthetic) {
    const SyntheticTaskSpec& s = cfg.task.synthetic;
    task = {{"source", "synthetic"},
            {"num_users", s.num_users},
            {"min_examples", s.min_examples},
            {"max_examples", s.max_examples},
            {"spread", s.spread},
            {"input_dim", s.input_dim},
            {"label", s.kind == TaskKind::kBinary ? "binary" : "regression"},
            {"user_weight_stddev", s.user_weight_stddev},
            {"target_noise", s.target_noise}};
  } else {
    task = {{"source", "csv"},
            {"path", cfg.task.path},
            {"user_column", cfg.task.user_column},
            {"target_column", cfg.task.target_column}};
  }
  task["holdout_fraction"] = cfg.task.holdout_fraction;
  task["seed"] = cfg.task.seed;

  Json model = {{"kind", ModelKindName(p.model.kind)},
                {"loss", LossKindName(p.model.loss)},
                {"input_dim", p.model.input_dim},
                {"output_dim", p.model.output_dim}};
  if (p.model.kind == ModelKind::kMlp) model["hidden_dim"] = p.model.hidden_dim;

  Json clip;
  if (p.clip.mode == ClipMode::kFixed) {
    clip = {{"mode", "fixed"}, {"clip", p.clip.fixed_clip}};
  } else {
    clip = {{"mode", "adaptive"},
            {"target_quantile", p.clip.quantile.target_quantile},
            {"clip_lr", p.clip.quantile.clip_learning_rate},
            {"initial_clip", p.clip.quantile.initial_clip},
            {"rule", RuleName(p.clip.quantile.rule)}};
  }

  return {{"task", task},
          {"model", model},
          {"rounds", p.rounds},
          {"q", p.q},
          {"client_lr", p.client_lr},
          {"server_lr", p.server_lr},
          {"momentum", p.beta},
          {"local_epochs", p.local_epochs},
          {"batch_size", cfg.task.synthetic.batch_size},
          {"clip", clip},
          {"noise_multiplier", p.z},
          {"count_noise_stddev", run.privacy.sigma_b},
          {"seed", p.seed},
          {"eval_period", p.eval_period},
          {"workers", p.workers}};
}

// Derived values recorded next to the echo.
inline Json ResolvedSummary(const RunConfig& cfg, const LoadedRun& run) {
  return {{"num_users", run.data.clients.size()},
          {"num_eval_examples", run.data.eval.size()},
          {"num_params", run.params.model.num_params()},
          {"q", run.privacy.q},
          {"expected_clients_per_round", run.privacy.expected_clients()},
          {"z", run.privacy.z},
          {"z_delta", run.privacy.z_delta},
          {"sigma_b", run.privacy.sigma_b},
          {"shifted_bits", run.privacy.shifted_bits},
          {"defaulted", cfg.defaulted}};
}

}  // namespace adaclip

#endif  // ADACLIP_CONFIG_H_
