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

// Splits an effective noise multiplier z between the update sum and the
// clipped-count sum so that the pair costs the same privacy as a single
// Gaussian query with multiplier z.
//
// With count sensitivity s (1 for {0,1} bits, 0.5 for shifted bits) the
// combined multiplier satisfies z^-2 = z_delta^-2 + (sigma_b / s)^-2.

#ifndef ADACLIP_PRIVACY_CALIBRATION_H_
#define ADACLIP_PRIVACY_CALIBRATION_H_

#include <cmath>
#include <sstream>

#include "adaclip/errors.h"

namespace adaclip {

// Default count-noise stddev: qn / 20, i.e. stddev 0.05 on the averaged
// fraction.
inline double DefaultCountNoiseStddev(double q, double n) { return q * n / 20.0; }

// Update noise multiplier for a target effective multiplier `z`.
// `shifted_bits` selects sensitivity 0.5 for the count query.
inline double DeriveUpdateNoise(double z, double sigma_b, bool shifted_bits = true) {
  if (!(z >= 0.0) || !std::isfinite(z)) {
    throw CalibrationError("noise multiplier must be finite and non-negative");
  }
  if (z == 0.0) return 0.0;
  const double count_multiplier = shifted_bits ? 2.0 * sigma_b : sigma_b;
  if (!(z < count_multiplier)) {
    std::ostringstream msg;
    msg << "infeasible noise split: z = " << z << " must be below "
        << (shifted_bits ? "2*sigma_b = " : "sigma_b = ") << count_multiplier;
    throw CalibrationError(msg.str());
  }
  const double inv = 1.0 / (z * z) - 1.0 / (count_multiplier * count_multiplier);
  return 1.0 / std::sqrt(inv);
}

// Inverse of DeriveUpdateNoise.
inline double CombineNoise(double z_delta, double sigma_b, bool shifted_bits = true) {
  if (z_delta == 0.0) return 0.0;
  const double count_multiplier = shifted_bits ? 2.0 * sigma_b : sigma_b;
  if (count_multiplier == 0.0) return 0.0;
  return 1.0 / std::sqrt(1.0 / (z_delta * z_delta) +
                         1.0 / (count_multiplier * count_multiplier));
}

// Per-coordinate stddev of the noise added to the SUM of clipped updates.
inline double UpdateNoiseStddev(double z_delta, double clip) { return z_delta * clip; }

enum class ClipMode { kFixed, kAdaptive };

// Resolved privacy parameters for one run.
struct PrivacyParams {
  double q = 1.0;
  double n = 1.0;
  double z = 0.0;
  double sigma_b = 0.0;
  double z_delta = 0.0;
  bool shifted_bits = true;

  double expected_clients() const { return q * n; }

  // Fixed clipping sends no count query, so all of z goes to the updates.
  static PrivacyParams Resolve(double q, double n, double z, double sigma_b,
                               ClipMode mode, bool shifted_bits = true) {
    PrivacyParams p{q, n, z, sigma_b, z, shifted_bits};
    if (mode == ClipMode::kAdaptive) p.z_delta = DeriveUpdateNoise(z, sigma_b, shifted_bits);
    return p;
  }
};

}  // namespace adaclip

#endif  // ADACLIP_PRIVACY_CALIBRATION_H_
