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

// Federated averaging with user-level DP, server momentum and an adaptive
// clipping bound that tracks a quantile of client update norms.
//
// Each round:
//   1. sample users independently with probability q;
//   2. every sampled user runs one pass of minibatch SGD, clips its delta
//      to C and reports a shifted bit (-0.5 unclipped, +0.5 clipped);
//   3. the server adds N(0, (z_delta C)^2 I) to the delta sum and
//      N(0, sigma_b^2) to the bit sum, and divides both by qn;
//   4. momentum and model step, then the clip moves by
//      C <- C exp(-eta_C (b_tilde - gamma)).

#ifndef ADACLIP_FEDERATION_H_
#define ADACLIP_FEDERATION_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adaclip/dataset.h"
#include "adaclip/errors.h"
#include "adaclip/model.h"
#include "adaclip/parallel.h"
#include "adaclip/param_vector.h"
#include "adaclip/privacy_calibration.h"
#include "adaclip/quantile_tracker.h"
#include "adaclip/rng.h"

namespace adaclip {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kUnclippedBit = -0.5;
inline constexpr double kClippedBit = 0.5;

struct ClientUpdate {
  ParamVector delta;   // clipped
  double bit_shifted;  // kUnclippedBit iff the pre-clip norm was <= C
  double preclip_norm;
};

inline ClientUpdate ClipDelta(ParamVector delta, double clip) {
  const double norm = delta.Norm();
  if (norm <= clip) return {std::move(delta), kUnclippedBit, norm};
  delta.Scale(clip / norm);
  return {std::move(delta), kClippedBit, norm};
}

// One local epoch (or `epochs`) of sequential minibatch SGD from `theta0`,
// returning the clipped delta.
inline ClientUpdate LocalFedAvg(const ClientDataset& client, const ParamVector& theta0,
                                double client_lr, double clip, const ModelSpec& spec,
                                int epochs = 1, int64_t round = -1) {
  ParamVector theta = theta0;
  const auto batches = client.Batches();
  for (int e = 0; e < epochs; ++e) {
    for (const auto& batch : batches) {
      LossAndGrad lg = LossAndGradient(spec, theta, batch);
      if (!std::isfinite(lg.loss) || !lg.gradient.AllFinite()) {
        std::ostringstream msg;
        msg << "client '" << client.user_id << "'";
        if (round >= 0) msg << " in round " << round;
        msg << ": non-finite loss during local training";
        throw DivergenceError(msg.str());
      }
      theta.AddScaled(lg.gradient, -client_lr);
    }
  }
  return ClipDelta(theta - theta0, clip);
}

// Indices in [0, num_users) included independently with probability q, in
// ascending order. Draws exactly one uniform per user.
inline std::vector<std::size_t> PoissonSample(std::size_t num_users, double q,
                                              RngStream& stream) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < num_users; ++i) {
    if (stream.Uniform() < q) out.push_back(i);
  }
  return out;
}

struct Aggregate {
  ParamVector delta_tilde;
  // Noisy estimate of the fraction of unclipped updates; NaN when no count
  // query is made (fixed clipping).
  double frac_below_noisy = kNaN;
};

// Sums in the order given (callers pass ascending user ids), adds Gaussian
// noise to both sums and divides by the expected client count qn.
//
// With shifted bits s_i = 0.5 - b_i the server recovers
//   b_tilde = 0.5 - (sum s_i + N(0, sigma_b^2)) / qn
// which equals sum b_i / qn + N / qn whenever |Q| = qn.
inline Aggregate AggregateRound(std::span<const ClientUpdate> updates, std::size_t dim,
                                const PrivacyParams& params, double clip,
                                RngStream& update_noise, RngStream* count_noise) {
  const double qn = params.expected_clients();
  ParamVector sum(dim);
  double bit_sum = 0.0;
  for (const ClientUpdate& u : updates) {
    sum += u.delta;
    bit_sum += u.bit_shifted;
  }
  const double sigma_delta = params.z_delta == 0.0 ? 0.0 : UpdateNoiseStddev(params.z_delta, clip);
  if (sigma_delta > 0.0) sum += GaussianVector(update_noise, dim, sigma_delta);
  for (double& v : sum) v /= qn;

  Aggregate out{std::move(sum), kNaN};
  if (count_noise != nullptr) {
    const double noise = params.sigma_b > 0.0 ? params.sigma_b * count_noise->Gaussian() : 0.0;
    out.frac_below_noisy = 0.5 - (bit_sum + noise) / qn;
  }
  return out;
}

struct ClipConfig {
  ClipMode mode = ClipMode::kAdaptive;
  double fixed_clip = 1.0;
  QuantileConfig quantile;

  double initial() const { return mode == ClipMode::kFixed ? fixed_clip : quantile.initial_clip; }
};

struct ServerState {
  ParamVector theta;
  ParamVector momentum;
  ClipState clip;
  int64_t round = 0;
  double server_lr = 1.0;
  double beta = 0.9;
};

struct RoundRecord {
  int64_t round = 0;
  double clip_before = 0.0;
  double clip_after = 0.0;
  double frac_below_exact = kNaN;
  double frac_below_noisy = kNaN;
  double mean_preclip_norm = kNaN;
  double eval_loss = kNaN;
  double eval_metric = kNaN;
  int64_t sampled_count = 0;
};

struct StepResult {
  ServerState state;
  RoundRecord record;
};

// Consumes only privatized aggregates. Fills round, clip_before, clip_after
// and frac_below_noisy of the returned record.
inline StepResult ServerStep(ServerState state, const ParamVector& delta_tilde,
                             double frac_below_noisy, const ClipConfig& clip_cfg) {
  RoundRecord rec;
  rec.round = state.round;
  rec.clip_before = state.clip.clip;
  rec.frac_below_noisy = frac_below_noisy;

  state.momentum.Scale(state.beta).AddScaled(delta_tilde, 1.0 - state.beta);
  state.theta.AddScaled(state.momentum, state.server_lr);
  if (!state.theta.AllFinite()) {
    std::ostringstream msg;
    msg << "round " << state.round << ": non-finite model parameters after server step";
    throw DivergenceError(msg.str());
  }
  if (clip_cfg.mode == ClipMode::kAdaptive) {
    state.clip = UpdateClip(state.clip, frac_below_noisy, clip_cfg.quantile);
  } else {
    ++state.clip.round;
  }
  ++state.round;
  rec.clip_after = state.clip.clip;
  return {std::move(state), rec};
}

struct FederatedData {
  std::vector<ClientDataset> clients;
  std::vector<Example> eval;
};

// Everything the engine needs for one run.
struct TrainParams {
  ModelSpec model;
  int64_t rounds = 0;
  double q = 1.0;
  double client_lr = 0.1;
  double server_lr = 1.0;
  double beta = 0.9;
  int local_epochs = 1;
  ClipConfig clip;
  double z = 0.0;
  // Negative means "use qn / 20".
  double sigma_b = -1.0;
  uint64_t seed = 0;
  int64_t eval_period = 1;
  std::size_t workers = 1;

  PrivacyParams Privacy(std::size_t num_users) const {
    const double n = static_cast<double>(num_users);
    const double sb = sigma_b < 0.0 ? DefaultCountNoiseStddev(q, n) : sigma_b;
    return PrivacyParams::Resolve(q, n, z, sb, clip.mode);
  }
};

struct TrainResult {
  ParamVector theta;
  std::vector<RoundRecord> records;
  PrivacyParams privacy;
};

struct TrainHooks {
  std::function<void(std::string_view)> warn;
  std::function<void(const RoundRecord&)> on_round;
};

inline TrainResult Train(const TrainParams& p, const FederatedData& data,
                         const TrainHooks& hooks = {}) {
  const std::size_t n = data.clients.size();
  if (n == 0) throw Error("Train: no clients");
  const PrivacyParams privacy = p.Privacy(n);
  const ModelSpec& spec = p.model;

  ServerState state;
  state.theta = InitParams(spec, p.seed);
  state.momentum = ParamVector(state.theta.dim());
  state.clip = ClipState{p.clip.initial(), 0};
  state.server_lr = p.server_lr;
  state.beta = p.beta;

  TrainResult result;
  result.privacy = privacy;
  result.records.reserve(static_cast<std::size_t>(std::max<int64_t>(p.rounds, 0)));

  for (int64_t t = 0; t < p.rounds; ++t) {
    const auto r = static_cast<uint32_t>(t);
    RngStream sampling(p.seed, StreamLabel::kSampling, r);
    RngStream update_noise(p.seed, StreamLabel::kUpdateNoise, r);
    RngStream count_noise(p.seed, StreamLabel::kCountNoise, r);

    const std::vector<std::size_t> sampled = PoissonSample(n, p.q, sampling);
    if (sampled.empty() && hooks.warn) {
      hooks.warn("round " + std::to_string(t) + ": no clients sampled; noise-only update");
    }

    const double clip = state.clip.clip;
    std::vector<ClientUpdate> updates(sampled.size());
    ParallelFor(sampled.size(), p.workers, [&](std::size_t k) {
      updates[k] = LocalFedAvg(data.clients[sampled[k]], state.theta, p.client_lr, clip, spec,
                               p.local_epochs, t);
    });

    double unclipped = 0.0;
    double norm_sum = 0.0;
    for (const ClientUpdate& u : updates) {
      if (u.bit_shifted == kUnclippedBit) unclipped += 1.0;
      norm_sum += u.preclip_norm;
    }

    const bool adaptive = p.clip.mode == ClipMode::kAdaptive;
    Aggregate agg = AggregateRound(updates, state.theta.dim(), privacy, clip, update_noise,
                                   adaptive ? &count_noise : nullptr);
    StepResult step = ServerStep(std::move(state), agg.delta_tilde, agg.frac_below_noisy, p.clip);
    state = std::move(step.state);

    RoundRecord rec = step.record;
    rec.sampled_count = static_cast<int64_t>(sampled.size());
    if (!sampled.empty()) {
      const double m = static_cast<double>(sampled.size());
      rec.frac_below_exact = unclipped / m;
      rec.mean_preclip_norm = norm_sum / m;
    }
    const bool eval_round = p.eval_period > 0 && ((t + 1) % p.eval_period == 0 || t + 1 == p.rounds);
    if (eval_round && !data.eval.empty()) {
      const EvalResult ev = Evaluate(spec, state.theta, data.eval);
      rec.eval_loss = ev.loss;
      rec.eval_metric = ev.metric;
    }
    if (hooks.on_round) hooks.on_round(rec);
    result.records.push_back(rec);
  }
  result.theta = std::move(state.theta);
  return result;
}

}  // namespace adaclip

#endif  // ADACLIP_FEDERATION_H_
