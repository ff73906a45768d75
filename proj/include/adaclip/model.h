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

// Small differentiable models with hand-written gradients.
//
// Parameter layout (row-major weights, then biases):
//   linear / logistic:  W[out x in], b[out]
//   mlp (tanh hidden):  W1[hidden x in], b1[hidden], W2[out x hidden], b2[out]

#ifndef ADACLIP_MODEL_H_
#define ADACLIP_MODEL_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string_view>
#include <vector>

#include "adaclip/errors.h"
#include "adaclip/param_vector.h"
#include "adaclip/rng.h"

namespace adaclip {

struct Example {
  std::vector<double> features;
  double target = 0.0;

  friend bool operator==(const Example&, const Example&) = default;
};

enum class ModelKind { kLinearRegression, kLogisticRegression, kMlp };
enum class LossKind { kSquaredError, kCrossEntropy };

constexpr std::string_view ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLinearRegression: return "linear_regression";
    case ModelKind::kLogisticRegression: return "logistic_regression";
    case ModelKind::kMlp: return "mlp";
  }
  return "unknown";
}

constexpr std::string_view LossKindName(LossKind loss) {
  return loss == LossKind::kSquaredError ? "squared_error" : "cross_entropy";
}

struct ModelSpec {
  ModelKind kind = ModelKind::kLogisticRegression;
  std::size_t input_dim = 1;
  // 1 means a scalar output: a regression value or a binary logit. Larger
  // values give a softmax over classes 0..output_dim-1.
  std::size_t output_dim = 1;
  std::size_t hidden_dim = 16;
  LossKind loss = LossKind::kCrossEntropy;

  static ModelSpec Linear(std::size_t input_dim) {
    return {ModelKind::kLinearRegression, input_dim, 1, 0, LossKind::kSquaredError};
  }
  static ModelSpec Logistic(std::size_t input_dim, std::size_t classes = 1) {
    return {ModelKind::kLogisticRegression, input_dim, classes, 0, LossKind::kCrossEntropy};
  }
  static ModelSpec Mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                       LossKind loss) {
    return {ModelKind::kMlp, input_dim, output_dim, hidden_dim, loss};
  }

  bool is_classification() const { return loss == LossKind::kCrossEntropy; }

  std::size_t num_params() const {
    if (kind == ModelKind::kMlp) {
      return hidden_dim * input_dim + hidden_dim + output_dim * hidden_dim + output_dim;
    }
    return output_dim * input_dim + output_dim;
  }

  void Validate() const {
    if (input_dim == 0) throw ConfigError("model.input_dim", "must be positive");
    if (output_dim == 0) throw ConfigError("model.output_dim", "must be positive");
    if (kind == ModelKind::kMlp && hidden_dim == 0) {
      throw ConfigError("model.hidden_dim", "must be positive");
    }
    if (kind == ModelKind::kLinearRegression && loss != LossKind::kSquaredError) {
      throw ConfigError("model.loss", "linear_regression requires squared_error");
    }
    if (kind == ModelKind::kLogisticRegression && loss != LossKind::kCrossEntropy) {
      throw ConfigError("model.loss", "logistic_regression requires cross_entropy");
    }
    if (loss == LossKind::kSquaredError && output_dim != 1) {
      throw ConfigError("model.output_dim", "squared_error supports a scalar output only");
    }
  }
};

struct LossAndGrad {
  double loss = 0.0;
  ParamVector gradient;
};

namespace model_internal {

inline double Softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline std::size_t ClassIndex(const ModelSpec& spec, double target) {
  const double k = std::round(target);
  if (k != target || k < 0.0 || k >= static_cast<double>(spec.output_dim)) {
    std::ostringstream msg;
    msg << "class target " << target << " outside [0, " << spec.output_dim << ")";
    throw Error(msg.str());
  }
  return static_cast<std::size_t>(k);
}

// Loss of one example from its outputs; writes dloss/doutput into `dout`.
inline double HeadLoss(const ModelSpec& spec, std::span<const double> out, double target,
                       std::span<double> dout) {
  if (spec.loss == LossKind::kSquaredError) {
    const double r = out[0] - target;
    dout[0] = r;
    return 0.5 * r * r;
  }
  if (spec.output_dim == 1) {
    dout[0] = Sigmoid(out[0]) - target;
    return Softplus(out[0]) - target * out[0];
  }
  const std::size_t cls = ClassIndex(spec, target);
  const double mx = *std::max_element(out.begin(), out.end());
  double z = 0.0;
  for (double o : out) z += std::exp(o - mx);
  const double lse = mx + std::log(z);
  for (std::size_t k = 0; k < out.size(); ++k) {
    dout[k] = std::exp(out[k] - lse) - (k == cls ? 1.0 : 0.0);
  }
  return lse - out[cls];
}

// out = W x + b, with W row-major [rows x cols] starting at `w`.
inline void Affine(std::span<const double> w, std::span<const double> b,
                   std::span<const double> x, std::span<double> out) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < out.size(); ++r) {
    double s = b[r];
    const double* row = w.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) s += row[c] * x[c];
    out[r] = s;
  }
}

inline void CheckShapes(const ModelSpec& spec, const ParamVector& params,
                        std::span<const Example> batch) {
  if (params.dim() != spec.num_params()) {
    std::ostringstream msg;
    msg << "parameter dimension " << params.dim() << " does not match model ("
        << spec.num_params() << ")";
    throw Error(msg.str());
  }
  for (const Example& ex : batch) {
    if (ex.features.size() != spec.input_dim) {
      std::ostringstream msg;
      msg << "feature dimension " << ex.features.size() << " does not match model input "
          << spec.input_dim;
      throw Error(msg.str());
    }
  }
}

// Forward pass; fills `hidden` (mlp only) and `out`.
inline void Forward(const ModelSpec& spec, std::span<const double> p,
                    std::span<const double> x, std::span<double> hidden,
                    std::span<double> out) {
  const std::size_t in = spec.input_dim;
  const std::size_t o = spec.output_dim;
  if (spec.kind != ModelKind::kMlp) {
    Affine(p.subspan(0, o * in), p.subspan(o * in, o), x, out);
    return;
  }
  const std::size_t h = spec.hidden_dim;
  const std::size_t w2 = h * in + h;
  Affine(p.subspan(0, h * in), p.subspan(h * in, h), x, hidden);
  for (double& v : hidden) v = std::tanh(v);
  Affine(p.subspan(w2, o * h), p.subspan(w2 + o * h, o), hidden, out);
}

}  // namespace model_internal

// Mean per-example loss over `batch` and its gradient.
inline LossAndGrad LossAndGradient(const ModelSpec& spec, const ParamVector& params,
                                   std::span<const Example> batch) {
  using namespace model_internal;
  if (batch.empty()) throw Error("LossAndGradient: empty batch");
  CheckShapes(spec, params, batch);

  const std::size_t in = spec.input_dim;
  const std::size_t o = spec.output_dim;
  const std::size_t h = spec.kind == ModelKind::kMlp ? spec.hidden_dim : 0;
  const auto p = params.span();

  LossAndGrad result{0.0, ParamVector(params.dim())};
  auto g = result.gradient.span();
  std::vector<double> hidden(h), out(o), dout(o), dhidden(h);

  for (const Example& ex : batch) {
    const std::span<const double> x = ex.features;
    Forward(spec, p, x, hidden, out);
    result.loss += HeadLoss(spec, out, ex.target, dout);

    if (spec.kind != ModelKind::kMlp) {
      for (std::size_t r = 0; r < o; ++r) {
        double* row = g.data() + r * in;
        for (std::size_t c = 0; c < in; ++c) row[c] += dout[r] * x[c];
        g[o * in + r] += dout[r];
      }
      continue;
    }

    const std::size_t w2 = h * in + h;
    const std::size_t b2 = w2 + o * h;
    std::fill(dhidden.begin(), dhidden.end(), 0.0);
    for (std::size_t r = 0; r < o; ++r) {
      const double* w2row = p.data() + w2 + r * h;
      double* g2row = g.data() + w2 + r * h;
      for (std::size_t k = 0; k < h; ++k) {
        g2row[k] += dout[r] * hidden[k];
        dhidden[k] += dout[r] * w2row[k];
      }
      g[b2 + r] += dout[r];
    }
    for (std::size_t k = 0; k < h; ++k) {
      const double dpre = dhidden[k] * (1.0 - hidden[k] * hidden[k]);
      double* g1row = g.data() + k * in;
      for (std::size_t c = 0; c < in; ++c) g1row[c] += dpre * x[c];
      g[h * in + k] += dpre;
    }
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  result.loss *= inv;
  result.gradient.Scale(inv);
  return result;
}

// Model outputs for one example.
inline std::vector<double> Predict(const ModelSpec& spec, const ParamVector& params,
                                   std::span<const double> features) {
  std::vector<double> hidden(spec.kind == ModelKind::kMlp ? spec.hidden_dim : 0);
  std::vector<double> out(spec.output_dim);
  model_internal::Forward(spec, params.span(), features, hidden, out);
  return out;
}

struct EvalResult {
  double loss = 0.0;
  // Accuracy for classification, mean squared error for regression.
  double metric = 0.0;
};

inline bool HigherIsBetter(const ModelSpec& spec) { return spec.is_classification(); }

inline EvalResult Evaluate(const ModelSpec& spec, const ParamVector& params,
                           std::span<const Example> examples) {
  using namespace model_internal;
  if (examples.empty()) throw Error("Evaluate: empty evaluation set");
  CheckShapes(spec, params, examples);
  std::vector<double> hidden(spec.kind == ModelKind::kMlp ? spec.hidden_dim : 0);
  std::vector<double> out(spec.output_dim), dout(spec.output_dim);
  EvalResult r;
  for (const Example& ex : examples) {
    Forward(spec, params.span(), ex.features, hidden, out);
    r.loss += HeadLoss(spec, out, ex.target, dout);
    if (spec.loss == LossKind::kSquaredError) {
      const double e = out[0] - ex.target;
      r.metric += e * e;
    } else if (spec.output_dim == 1) {
      r.metric += ((out[0] > 0.0) == (ex.target >= 0.5)) ? 1.0 : 0.0;
    } else {
      const auto best = std::max_element(out.begin(), out.end()) - out.begin();
      r.metric += static_cast<double>(best) == ex.target ? 1.0 : 0.0;
    }
  }
  const double inv = 1.0 / static_cast<double>(examples.size());
  r.loss *= inv;
  r.metric *= inv;
  return r;
}

// Zero for linear models; scaled Gaussian weights and zero biases for the mlp.
inline ParamVector InitParams(const ModelSpec& spec, uint64_t seed) {
  ParamVector p(spec.num_params());
  if (spec.kind != ModelKind::kMlp) return p;
  RngStream rng(seed, StreamLabel::kModelInit, 0);
  const std::size_t in = spec.input_dim;
  const std::size_t h = spec.hidden_dim;
  const std::size_t o = spec.output_dim;
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (std::size_t i = 0; i < h * in; ++i) p[i] = s1 * rng.Gaussian();
  const std::size_t w2 = h * in + h;
  for (std::size_t i = 0; i < o * h; ++i) p[w2 + i] = s2 * rng.Gaussian();
  return p;
}

}  // namespace adaclip

#endif  // ADACLIP_MODEL_H_
