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

// Online estimation of a quantile of a scalar stream by gradient steps on
// the pinball loss. The tracker drives the adaptive clipping bound: the
// stream is the sequence of client update norms and the estimate is the
// clip C.
//
// For a sample x and estimate c the loss is
//   (1 - gamma) (c - x)   if x <= c
//   gamma (x - c)         otherwise
// and its derivative in c averages to (fraction of samples <= c) - gamma,
// so the fixed point of the update sits at the gamma-th quantile.

#ifndef ADACLIP_QUANTILE_TRACKER_H_
#define ADACLIP_QUANTILE_TRACKER_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

#include "adaclip/errors.h"

namespace adaclip {

inline constexpr double kDefaultClipLearningRate = 0.2;
inline constexpr double kDefaultInitialClip = 0.1;
// Lower bound applied by the linear rule, which can otherwise step below 0.
inline constexpr double kLinearClipFloor = 1e-6;

enum class UpdateRule { kGeometric, kLinear };

constexpr std::string_view RuleName(UpdateRule rule) {
  return rule == UpdateRule::kGeometric ? "geometric" : "linear";
}

struct QuantileConfig {
  double target_quantile = 0.5;
  double clip_learning_rate = kDefaultClipLearningRate;
  double initial_clip = kDefaultInitialClip;
  UpdateRule rule = UpdateRule::kGeometric;

  void Validate() const {
    if (!(target_quantile >= 0.0 && target_quantile <= 1.0)) {
      throw ConfigError("target_quantile", "must lie in [0, 1]");
    }
    if (!(clip_learning_rate > 0.0) || !std::isfinite(clip_learning_rate)) {
      throw ConfigError("clip_lr", "must be positive and finite");
    }
    if (!(initial_clip > 0.0) || !std::isfinite(initial_clip)) {
      throw ConfigError("initial_clip", "must be positive and finite");
    }
  }
};

struct ClipState {
  double clip = kDefaultInitialClip;
  int64_t round = 0;

  static ClipState Initial(const QuantileConfig& cfg) { return {cfg.initial_clip, 0}; }
};

inline double QuantileLoss(double estimate, double sample, double gamma) {
  return sample <= estimate ? (1.0 - gamma) * (estimate - sample)
                            : gamma * (sample - estimate);
}

// Ties (sample == estimate) take the "below" branch.
inline double QuantileLossDerivative(double estimate, double sample, double gamma) {
  return sample <= estimate ? 1.0 - gamma : -gamma;
}

// Fraction of `values` at most `estimate`.
inline double FractionBelow(std::span<const double> values, double estimate) {
  if (values.empty()) throw Error("FractionBelow: empty batch");
  const auto below = std::count_if(values.begin(), values.end(),
                                   [estimate](double v) { return v <= estimate; });
  return static_cast<double>(below) / static_cast<double>(values.size());
}

// One gradient step on the pinball loss given the (possibly noisy) fraction
// of samples at or below the current estimate.
inline ClipState UpdateClip(const ClipState& state, double frac_below,
                            const QuantileConfig& cfg) {
  const double step = cfg.clip_learning_rate * (frac_below - cfg.target_quantile);
  ClipState next = state;
  if (cfg.rule == UpdateRule::kGeometric) {
    next.clip = state.clip * std::exp(-step);
  } else {
    next.clip = std::max(state.clip - step, kLinearClipFloor);
  }
  ++next.round;
  return next;
}

}  // namespace adaclip

#endif  // ADACLIP_QUANTILE_TRACKER_H_
