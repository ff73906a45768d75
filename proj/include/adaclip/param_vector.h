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

#ifndef ADACLIP_PARAM_VECTOR_H_
#define ADACLIP_PARAM_VECTOR_H_

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "adaclip/rng.h"

namespace adaclip {

// Flat vector of model parameters or parameter deltas.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}
  ParamVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t dim() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  const std::vector<double>& values() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  double SquaredNorm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return s;
  }
  double Norm() const { return std::sqrt(SquaredNorm()); }

  bool AllFinite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  ParamVector& Scale(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }

  // this += alpha * other
  ParamVector& AddScaled(const ParamVector& other, double alpha) {
    assert(other.dim() == dim());
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += alpha * other[i];
    return *this;
  }

  ParamVector& operator+=(const ParamVector& other) { return AddScaled(other, 1.0); }
  ParamVector& operator-=(const ParamVector& other) { return AddScaled(other, -1.0); }

  friend ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
  friend ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
  friend ParamVector operator*(ParamVector a, double s) { return a.Scale(s); }
  friend ParamVector operator*(double s, ParamVector a) { return a.Scale(s); }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

// `dim` i.i.d. N(0, stddev^2) draws. A zero stddev returns zeros and leaves
// the stream untouched.
inline ParamVector GaussianVector(RngStream& stream, std::size_t dim, double stddev) {
  ParamVector out(dim);
  if (stddev == 0.0) return out;
  for (double& v : out) v = stddev * stream.Gaussian();
  return out;
}

}  // namespace adaclip

#endif  // ADACLIP_PARAM_VECTOR_H_
