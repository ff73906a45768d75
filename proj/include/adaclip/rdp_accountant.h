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

// Renyi-DP accounting for T rounds of the Poisson-subsampled Gaussian
// mechanism with sampling rate q and noise multiplier z.
//
// Per-step RDP at order a is log(A_a) / (a - 1) where
//   A_a = E_{x ~ N(0, z^2)} [ ((1 - q) + q * exp((2x - 1) / (2 z^2)))^a ].
// Integer orders use the finite binomial expansion of A_a. Fractional
// orders use the two-sided series of Mironov, Talwar and Zhang (2019),
// which splits the integral at the point where the two mixture
// components cross.

#ifndef ADACLIP_RDP_ACCOUNTANT_H_
#define ADACLIP_RDP_ACCOUNTANT_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "adaclip/errors.h"

namespace adaclip {
namespace rdp_internal {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// log(exp(a) - exp(b)); requires a >= b.
inline double LogSub(double a, double b) {
  if (b == kNegInf) return a;
  if (a <= b) return kNegInf;
  return a + std::log1p(-std::exp(b - a));
}

// log(erfc(x)), stable for large positive x where erfc underflows.
inline double LogErfc(double x) {
  if (x < 25.0) return std::log(std::erfc(x));
  const double r = 1.0 / (x * x);
  const double series =
      1.0 - r / 2.0 + 3.0 * r * r / 4.0 - 15.0 * r * r * r / 8.0 +
      105.0 * r * r * r * r / 16.0;
  return -x * x - std::log(x) - 0.5 * std::log(std::numbers::pi) + std::log(series);
}

inline double LogBinomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double LogAInteger(double q, double sigma, int64_t alpha) {
  double log_a = kNegInf;
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  for (int64_t i = 0; i <= alpha; ++i) {
    const double di = static_cast<double>(i);
    const double term = LogBinomial(static_cast<double>(alpha), di) + di * log_q +
                        static_cast<double>(alpha - i) * log_1mq +
                        (di * di - di) / (2.0 * sigma * sigma);
    log_a = LogAdd(log_a, term);
  }
  return log_a;
}

inline double LogAFractional(double q, double sigma, double alpha) {
  double log_a0 = kNegInf;
  double log_a1 = kNegInf;
  const double z0 = sigma * sigma * std::log(1.0 / q - 1.0) + 0.5;
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  // |binom(alpha, i)| and its sign, advanced by the ratio recurrence.
  double log_coef = 0.0;
  bool coef_positive = true;
  constexpr int kMaxTerms = 100000;
  for (int i = 0; i < kMaxTerms; ++i) {
    const double di = i;
    const double j = alpha - di;
    const double log_t0 = log_coef + di * log_q + j * log_1mq;
    const double log_t1 = log_coef + j * log_q + di * log_1mq;
    const double log_e0 = std::log(0.5) + LogErfc((di - z0) / (std::numbers::sqrt2 * sigma));
    const double log_e1 = std::log(0.5) + LogErfc((z0 - j) / (std::numbers::sqrt2 * sigma));
    const double log_s0 = log_t0 + (di * di - di) / (2.0 * sigma * sigma) + log_e0;
    const double log_s1 = log_t1 + (j * j - j) / (2.0 * sigma * sigma) + log_e1;
    if (coef_positive) {
      log_a0 = LogAdd(log_a0, log_s0);
      log_a1 = LogAdd(log_a1, log_s1);
    } else {
      log_a0 = LogSub(log_a0, log_s0);
      log_a1 = LogSub(log_a1, log_s1);
    }
    if (std::max(log_s0, log_s1) < -30.0) break;
    const double ratio = (alpha - di) / (di + 1.0);
    if (ratio == 0.0) break;
    log_coef += std::log(std::abs(ratio));
    if (ratio < 0.0) coef_positive = !coef_positive;
  }
  return LogAdd(log_a0, log_a1);
}

}  // namespace rdp_internal

// {1.1, ..., 1.9} u {2, ..., 64} u {128, 256, 512}
inline std::vector<double> DefaultOrders() {
  std::vector<double> orders;
  for (int x = 1; x <= 9; ++x) orders.push_back(1.0 + x / 10.0);
  for (int a = 2; a <= 64; ++a) orders.push_back(a);
  for (double a : {128.0, 256.0, 512.0}) orders.push_back(a);
  return orders;
}

// RDP of one step of the subsampled Gaussian mechanism at order `alpha`.
inline double RdpPerStep(double q, double z, double alpha) {
  if (!(q >= 0.0 && q <= 1.0)) throw AccountingError("sampling rate must lie in [0, 1]");
  if (!(z > 0.0)) throw AccountingError("noise multiplier must be positive");
  if (!(alpha > 1.0)) throw AccountingError("RDP order must exceed 1");
  if (q == 0.0) return 0.0;
  double log_a;
  if (q == 1.0) {
    log_a = alpha * (alpha - 1.0) / (2.0 * z * z);
  } else if (alpha == std::floor(alpha) && alpha < 1e6) {
    log_a = rdp_internal::LogAInteger(q, z, static_cast<int64_t>(alpha));
  } else {
    log_a = rdp_internal::LogAFractional(q, z, alpha);
  }
  const double rdp = log_a / (alpha - 1.0);
  if (!std::isfinite(rdp)) {
    std::ostringstream msg;
    msg << "non-finite RDP for q=" << q << " z=" << z << " alpha=" << alpha;
    throw AccountingError(msg.str());
  }
  return std::max(rdp, 0.0);
}

enum class Conversion {
  // eps = rdp + log(1/delta) / (a - 1)
  kClassic,
  // eps = rdp + log((a - 1) / a) - (log(delta) + log(a)) / (a - 1)
  // (Balle et al. 2020); strictly tighter than kClassic.
  kImproved,
};

struct EpsilonResult {
  double epsilon = 0.0;
  double order = 0.0;
};

inline EpsilonResult EpsilonFromRdp(const std::vector<double>& orders,
                                    const std::vector<double>& rdp, double delta,
                                    Conversion conversion = Conversion::kImproved) {
  if (orders.empty()) throw AccountingError("empty order ladder");
  if (!(delta > 0.0 && delta < 1.0)) throw AccountingError("delta must lie in (0, 1)");
  EpsilonResult best{std::numeric_limits<double>::infinity(), orders.front()};
  const double log_delta = std::log(delta);
  for (std::size_t k = 0; k < orders.size(); ++k) {
    const double a = orders[k];
    double eps;
    if (conversion == Conversion::kClassic) {
      eps = rdp[k] - log_delta / (a - 1.0);
    } else {
      eps = rdp[k] + std::log1p(-1.0 / a) - (log_delta + std::log(a)) / (a - 1.0);
    }
    if (eps < best.epsilon) best = {eps, a};
  }
  best.epsilon = std::max(best.epsilon, 0.0);
  return best;
}

// Accumulates RDP across rounds that share (q, z).
class RdpAccountant {
 public:
  RdpAccountant(double q, double z, std::vector<double> orders = DefaultOrders())
      : q_(q), z_(z), orders_(std::move(orders)) {
    if (orders_.empty()) throw AccountingError("empty order ladder");
    if (!std::is_sorted(orders_.begin(), orders_.end()) ||
        std::adjacent_find(orders_.begin(), orders_.end()) != orders_.end() ||
        !(orders_.front() > 1.0)) {
      throw AccountingError("orders must be strictly increasing and exceed 1");
    }
    per_step_.reserve(orders_.size());
    for (double a : orders_) per_step_.push_back(RdpPerStep(q_, z_, a));
    rdp_.assign(orders_.size(), 0.0);
  }

  void Compose(int64_t steps) {
    if (steps < 0) throw AccountingError("step count must be non-negative");
    steps_ += steps;
    for (std::size_t k = 0; k < rdp_.size(); ++k) {
      rdp_[k] = static_cast<double>(steps_) * per_step_[k];
    }
  }

  EpsilonResult GetEpsilon(double delta, Conversion conversion = Conversion::kImproved) const {
    return EpsilonFromRdp(orders_, rdp_, delta, conversion);
  }

  double q() const { return q_; }
  double z() const { return z_; }
  int64_t steps() const { return steps_; }
  const std::vector<double>& orders() const { return orders_; }
  const std::vector<double>& rdp() const { return rdp_; }
  const std::vector<double>& per_step() const { return per_step_; }

 private:
  double q_;
  double z_;
  std::vector<double> orders_;
  std::vector<double> per_step_;
  std::vector<double> rdp_;
  int64_t steps_ = 0;
};

inline EpsilonResult ComposeAndConvert(double q, double z, int64_t steps, double delta,
                                       Conversion conversion = Conversion::kImproved) {
  RdpAccountant acc(q, z);
  acc.Compose(steps);
  return acc.GetEpsilon(delta, conversion);
}

inline constexpr double kMinSolvedNoise = 0.01;
inline constexpr double kMaxSolvedNoise = 100.0;

// Smallest z in [0.01, 100] (to relative precision 1e-7) whose epsilon does
// not exceed `target_epsilon`.
inline double SolveNoiseForEpsilon(double q, int64_t steps, double delta, double target_epsilon,
                                   Conversion conversion = Conversion::kImproved) {
  if (!(target_epsilon > 0.0)) throw AccountingError("target epsilon must be positive");
  auto eps_at = [&](double z) { return ComposeAndConvert(q, z, steps, delta, conversion).epsilon; };
  double lo = kMinSolvedNoise;
  double hi = kMaxSolvedNoise;
  if (eps_at(lo) <= target_epsilon) return lo;
  if (eps_at(hi) > target_epsilon) {
    std::ostringstream msg;
    msg << "target epsilon " << target_epsilon << " unreachable with z <= " << kMaxSolvedNoise;
    throw AccountingError(msg.str());
  }
  // Invariant: eps(lo) > target >= eps(hi). Bisect in log space.
  while (hi / lo > 1.0 + 1e-7) {
    const double mid = std::sqrt(lo * hi);
    if (eps_at(mid) <= target_epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace adaclip

#endif  // ADACLIP_RDP_ACCOUNTANT_H_
