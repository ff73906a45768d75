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

// Client datasets: synthetic heterogeneous task generation and
// user-partitioned CSV ingestion.

#ifndef ADACLIP_DATASET_H_
#define ADACLIP_DATASET_H_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "adaclip/errors.h"
#include "adaclip/model.h"
#include "adaclip/rng.h"

namespace adaclip {

inline constexpr std::size_t kDefaultBatchSize = 16;

struct ClientDataset {
  std::string user_id;
  std::vector<Example> examples;
  std::size_t batch_size = kDefaultBatchSize;

  // Contiguous batches; the last one may be short.
  std::vector<std::span<const Example>> Batches() const {
    std::vector<std::span<const Example>> out;
    const std::size_t bs = std::max<std::size_t>(batch_size, 1);
    std::span<const Example> all = examples;
    for (std::size_t i = 0; i < all.size(); i += bs) {
      out.push_back(all.subspan(i, std::min(bs, all.size() - i)));
    }
    return out;
  }
};

enum class TaskKind { kBinary, kRegression };

struct SyntheticTaskSpec {
  std::size_t num_users = 1000;
  std::size_t min_examples = 10;
  std::size_t max_examples = 40;
  // User feature scales are log-uniform in [1/spread, spread].
  double spread = 10.0;
  std::size_t input_dim = 10;
  TaskKind kind = TaskKind::kBinary;
  // Stddev of per-user deviation of the true weights from the global ones.
  double user_weight_stddev = 0.5;
  // Additive target noise (regression only).
  double target_noise = 0.1;
  std::size_t batch_size = kDefaultBatchSize;

  void Validate() const {
    if (num_users < 1) throw ConfigError("task.num_users", "must be at least 1");
    if (min_examples < 1) throw ConfigError("task.min_examples", "must be at least 1");
    if (max_examples < min_examples) {
      throw ConfigError("task.max_examples", "must be >= task.min_examples");
    }
    if (!(spread >= 1.0) || !std::isfinite(spread)) {
      throw ConfigError("task.spread", "must be finite and >= 1");
    }
    if (input_dim < 1) throw ConfigError("task.input_dim", "must be at least 1");
    if (batch_size < 1) throw ConfigError("task.batch_size", "must be at least 1");
  }
};

// Per-user ground-truth weights are drawn around a shared global vector.
// User u sees features x = s_u * g with g ~ N(0, I) and s_u log-uniform in
// [1/spread, spread]; labels depend on g only, so the scale changes update
// norms without changing which linear classifier is best.
inline std::vector<ClientDataset> GenerateSyntheticTask(uint64_t seed,
                                                        const SyntheticTaskSpec& spec) {
  spec.Validate();
  const std::size_t d = spec.input_dim;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  RngStream global(seed, StreamLabel::kDataGen, 0);
  std::vector<double> w_global(d);
  // Global logits/targets have unit-order variance: |w| ~ 3 for binary.
  const double global_scale = spec.kind == TaskKind::kBinary ? 3.0 : 1.0;
  for (double& w : w_global) w = global_scale * inv_sqrt_d * global.Gaussian();

  std::vector<ClientDataset> clients;
  clients.reserve(spec.num_users);
  const double log_spread = std::log(spec.spread);
  for (std::size_t u = 0; u < spec.num_users; ++u) {
    RngStream rng(seed, StreamLabel::kDataGen, static_cast<uint32_t>(u + 1));
    const double scale = std::exp(log_spread * (2.0 * rng.Uniform() - 1.0));
    const std::size_t span = spec.max_examples - spec.min_examples + 1;
    const std::size_t m =
        spec.min_examples + std::min<std::size_t>(
                                static_cast<std::size_t>(rng.Uniform() * static_cast<double>(span)),
                                span - 1);
    std::vector<double> w_user(d);
    for (std::size_t k = 0; k < d; ++k) {
      w_user[k] = w_global[k] + spec.user_weight_stddev * inv_sqrt_d * rng.Gaussian();
    }

    ClientDataset client;
    client.user_id = "u" + std::to_string(u);
    client.batch_size = spec.batch_size;
    client.examples.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      Example ex;
      ex.features.resize(d);
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double g = rng.Gaussian();
        dot += w_user[k] * g;
        ex.features[k] = scale * g;
      }
      if (spec.kind == TaskKind::kBinary) {
        const double p = 1.0 / (1.0 + std::exp(-dot));
        ex.target = rng.Uniform() < p ? 1.0 : 0.0;
      } else {
        ex.target = scale * dot + spec.target_noise * rng.Gaussian();
      }
      client.examples.push_back(std::move(ex));
    }
    clients.push_back(std::move(client));
  }
  return clients;
}

// Moves the trailing `fraction` of each client's examples into a pooled
// evaluation set. Clients always keep at least one training example.
inline std::vector<Example> SplitHoldout(std::vector<ClientDataset>& clients, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ConfigError("task.holdout_fraction", "must lie in [0, 1)");
  }
  std::vector<Example> eval;
  for (ClientDataset& c : clients) {
    const std::size_t m = c.examples.size();
    std::size_t k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m)));
    k = std::min(k, m - 1);
    for (std::size_t i = m - k; i < m; ++i) eval.push_back(std::move(c.examples[i]));
    c.examples.resize(m - k);
  }
  return eval;
}

inline std::string FormatDouble(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

// Writes one row per example: user column, features x0..x{d-1}, target.
inline void WriteCsv(std::ostream& out, std::span<const ClientDataset> clients,
                     std::string_view user_column = "user",
                     std::string_view target_column = "target") {
  std::size_t d = 0;
  for (const ClientDataset& c : clients) {
    if (!c.examples.empty()) {
      d = c.examples.front().features.size();
      break;
    }
  }
  out << user_column;
  for (std::size_t k = 0; k < d; ++k) out << ",x" << k;
  out << ',' << target_column << '\n';
  for (const ClientDataset& c : clients) {
    for (const Example& ex : c.examples) {
      out << c.user_id;
      for (double v : ex.features) out << ',' << FormatDouble(v);
      out << ',' << FormatDouble(ex.target) << '\n';
    }
  }
}

inline void WriteCsvFile(const std::string& path, std::span<const ClientDataset> clients,
                         std::string_view user_column = "user",
                         std::string_view target_column = "target") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  WriteCsv(out, clients, user_column, target_column);
  if (!out) throw Error("failed writing " + path);
}

namespace csv_internal {

inline std::vector<std::string_view> SplitRow(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline double ParseCell(std::string_view cell, std::size_t row, std::string_view column) {
  cell = Trim(cell);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() ||
      !std::isfinite(v)) {
    std::ostringstream msg;
    msg << "row " << row << ", column '" << column << "': non-numeric value '" << cell << "'";
    throw IngestError(msg.str());
  }
  return v;
}

}  // namespace csv_internal

// One dataset per distinct user value, in order of first appearance.
// Every column other than the user and target columns is a feature.
// Row numbers in errors are 1-based file lines (the header is row 1).
inline std::vector<ClientDataset> IngestCsv(std::istream& in, std::string_view user_column,
                                            std::string_view target_column,
                                            std::size_t batch_size = kDefaultBatchSize) {
  using namespace csv_internal;
  std::string line;
  if (!std::getline(in, line)) throw IngestError("empty file: missing header");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const std::string header_line = line;
  std::vector<std::string_view> header = SplitRow(header_line);
  for (auto& h : header) h = Trim(h);

  std::size_t user_idx = header.size();
  std::size_t target_idx = header.size();
  std::vector<std::size_t> feature_idx;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == user_column) {
      user_idx = i;
    } else if (header[i] == target_column) {
      target_idx = i;
    } else {
      feature_idx.push_back(i);
    }
  }
  if (user_idx == header.size()) {
    throw IngestError("missing user column '" + std::string(user_column) + "'");
  }
  if (target_idx == header.size()) {
    throw IngestError("missing target column '" + std::string(target_column) + "'");
  }

  std::vector<ClientDataset> clients;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (Trim(line).empty()) continue;
    const auto cells = SplitRow(line);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << "row " << row << ": expected " << header.size() << " cells, found "
          << cells.size();
      throw IngestError(msg.str());
    }
    Example ex;
    ex.features.reserve(feature_idx.size());
    for (std::size_t i : feature_idx) ex.features.push_back(ParseCell(cells[i], row, header[i]));
    ex.target = ParseCell(cells[target_idx], row, header[target_idx]);

    std::string user(Trim(cells[user_idx]));
    auto [it, inserted] = index.try_emplace(user, clients.size());
    if (inserted) clients.push_back(ClientDataset{user, {}, batch_size});
    clients[it->second].examples.push_back(std::move(ex));
  }
  if (clients.empty()) throw IngestError("empty file: header present but no data rows");
  return clients;
}

inline std::vector<ClientDataset> IngestCsvFile(const std::string& path,
                                                std::string_view user_column,
                                                std::string_view target_column,
                                                std::size_t batch_size = kDefaultBatchSize) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open '" + path + "'");
  try {
    return IngestCsv(in, user_column, target_column, batch_size);
  } catch (const IngestError& e) {
    throw IngestError(path + ": " + e.what());
  }
}

}  // namespace adaclip

#endif  // ADACLIP_DATASET_H_
