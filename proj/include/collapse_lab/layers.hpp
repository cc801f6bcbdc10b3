// Copyright 2026 The collapse-lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "collapse_lab/errors.hpp"
#include "collapse_lab/tensor.hpp"

namespace collapse_lab::net {

enum class Mode { Train, Eval };

/// A trainable tensor and its gradient accumulator.
struct ParamRef {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
};

// ---------------------------------------------------------------------------

/// Fully connected layer, y = x·W + b with W stored [in, out].
class Dense {
 public:
  Dense() = default;
  Dense(std::size_t in, std::size_t out, bool bias)
      : weight(in, out), bias(1, out), grad_weight(in, out), grad_bias(1, out), has_bias(bias) {}

  /// Scaled-Gaussian fan-in initialization, N(0, 2/in); bias 0.
  template <class Urbg>
  void init(Urbg& gen) {
    std::normal_distribution<double> nd(0.0, std::sqrt(2.0 / static_cast<double>(in())));
    for (double& w : weight.storage()) w = nd(gen);
    bias.fill(0.0);
  }

  std::size_t in() const { return weight.rows(); }
  std::size_t out() const { return weight.cols(); }

  Tensor forward(const Tensor& x) {
    if (x.cols() != in()) throw StructuralError("dense: input width mismatch");
    input_ = x;
    const std::size_t n = x.rows(), ni = in(), no = out();
    Tensor y(n, no);
    for (std::size_t b = 0; b < n; ++b) {
      double* yr = y.data() + b * no;
      if (has_bias) {
        for (std::size_t o = 0; o < no; ++o) yr[o] = bias[o];
      }
      const double* xr = x.data() + b * ni;
      for (std::size_t i = 0; i < ni; ++i) {
        const double xi = xr[i];
        if (xi == 0.0) continue;
        const double* wr = weight.data() + i * no;
        for (std::size_t o = 0; o < no; ++o) yr[o] += xi * wr[o];
      }
    }
    return y;
  }

  /// Accumulates into grad_weight / grad_bias and returns dL/dx.
  Tensor backward(const Tensor& dy) {
    if (input_.size() == 0) throw UsageError("dense: backward without forward");
    const std::size_t n = dy.rows(), ni = in(), no = out();
    Tensor dx(n, ni);
    for (std::size_t b = 0; b < n; ++b) {
      const double* dyr = dy.data() + b * no;
      const double* xr = input_.data() + b * ni;
      double* dxr = dx.data() + b * ni;
      for (std::size_t i = 0; i < ni; ++i) {
        const double* wr = weight.data() + i * no;
        double* gwr = grad_weight.data() + i * no;
        const double xi = xr[i];
        double acc = 0.0;
        for (std::size_t o = 0; o < no; ++o) {
          acc += dyr[o] * wr[o];
          gwr[o] += xi * dyr[o];
        }
        dxr[i] = acc;
      }
      if (has_bias) {
        for (std::size_t o = 0; o < no; ++o) grad_bias[o] += dyr[o];
      }
    }
    return dx;
  }

  void zero_grad() {
    grad_weight.fill(0.0);
    grad_bias.fill(0.0);
  }

  Tensor weight;
  Tensor bias;
  Tensor grad_weight;
  Tensor grad_bias;
  bool has_bias = true;

 private:
  Tensor input_;
};

// ---------------------------------------------------------------------------

/// Per-channel BN parameters and statistics. alpha > 0 turns the layer into
/// post-shifted BN: y = γ·x̂ + β + α with α a constant, not a parameter.
struct BnLayerState {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double eps = 1e-5;
  double momentum = 0.1;
  double alpha = 0.0;

  static BnLayerState make(std::size_t channels, double gamma_init = 1.0, double alpha = 0.0) {
    BnLayerState s;
    s.gamma.assign(channels, gamma_init);
    s.beta.assign(channels, 0.0);
    s.running_mean.assign(channels, 0.0);
    s.running_var.assign(channels, 1.0);
    s.alpha = alpha;
    return s;
  }

  std::size_t channels() const { return gamma.size(); }

  void validate() const {
    const auto c = gamma.size();
    if (beta.size() != c || running_mean.size() != c || running_var.size() != c) {
      throw StructuralError("bn: channel counts differ across state fields");
    }
    for (double v : running_var) {
      if (v < 0.0) throw StructuralError("bn: running_var must be >= 0");
    }
    if (alpha < 0.0) throw StructuralError("bn: alpha must be >= 0");
  }
};

struct BnGrads {
  Tensor grad_in;
  std::vector<double> grad_gamma;
  std::vector<double> grad_beta;
};

class BatchNorm {
 public:
  BatchNorm() = default;
  explicit BatchNorm(BnLayerState s)
      : state(std::move(s)), grad_gamma(state.channels(), 0.0), grad_beta(state.channels(), 0.0) {
    state.validate();
  }

  std::size_t channels() const { return state.channels(); }

  Tensor forward(const Tensor& x, Mode mode) {
    const std::size_t n = x.rows(), c = channels();
    if (x.cols() != c) throw StructuralError("bn: input width mismatch");
    Tensor y(n, c);
    if (mode == Mode::Eval) {
      for (std::size_t j = 0; j < c; ++j) {
        const double inv = 1.0 / std::sqrt(state.running_var[j] + state.eps);
        for (std::size_t b = 0; b < n; ++b) {
          y.at(b, j) = state.gamma[j] * (x.at(b, j) - state.running_mean[j]) * inv + state.beta[j] + state.alpha;
        }
      }
      cached_ = false;
      return y;
    }
    if (n < 2) throw DomainError("bn: train mode needs a batch of at least 2");
    normalized_ = Tensor(n, c);
    inv_std_.assign(c, 0.0);
    for (std::size_t j = 0; j < c; ++j) {
      double mean = 0.0;
      for (std::size_t b = 0; b < n; ++b) mean += x.at(b, j);
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double d = x.at(b, j) - mean;
        var += d * d;
      }
      var /= static_cast<double>(n);
      const double inv = 1.0 / std::sqrt(var + state.eps);
      inv_std_[j] = inv;
      for (std::size_t b = 0; b < n; ++b) {
        const double xh = (x.at(b, j) - mean) * inv;
        normalized_.at(b, j) = xh;
        y.at(b, j) = state.gamma[j] * xh + state.beta[j] + state.alpha;
      }
      const double unbiased = var * static_cast<double>(n) / static_cast<double>(n - 1);
      state.running_mean[j] = (1.0 - state.momentum) * state.running_mean[j] + state.momentum * mean;
      state.running_var[j] = (1.0 - state.momentum) * state.running_var[j] + state.momentum * unbiased;
    }
    cached_ = true;
    return y;
  }

  /// Gradients through the last train-mode forward. α is constant and has
  /// no gradient; the result is identical for BN and psBN.
  BnGrads backward(const Tensor& dy) {
    if (!cached_) throw UsageError("bn: backward needs a cached train-mode forward");
    const std::size_t n = dy.rows(), c = channels();
    BnGrads g{Tensor(n, c), std::vector<double>(c, 0.0), std::vector<double>(c, 0.0)};
    const double nd = static_cast<double>(n);
    for (std::size_t j = 0; j < c; ++j) {
      double sum_dy = 0.0, sum_dy_xh = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        sum_dy += dy.at(b, j);
        sum_dy_xh += dy.at(b, j) * normalized_.at(b, j);
      }
      g.grad_beta[j] = sum_dy;
      g.grad_gamma[j] = sum_dy_xh;
      const double k = state.gamma[j] * inv_std_[j] / nd;
      for (std::size_t b = 0; b < n; ++b) {
        g.grad_in.at(b, j) = k * (nd * dy.at(b, j) - sum_dy - normalized_.at(b, j) * sum_dy_xh);
      }
      grad_gamma[j] += g.grad_gamma[j];
      grad_beta[j] += g.grad_beta[j];
    }
    return g;
  }

  /// Output of the normalize stage from the last train-mode forward.
  const Tensor& normalized() const { return normalized_; }

  void zero_grad() {
    std::fill(grad_gamma.begin(), grad_gamma.end(), 0.0);
    std::fill(grad_beta.begin(), grad_beta.end(), 0.0);
  }

  BnLayerState state;
  std::vector<double> grad_gamma;
  std::vector<double> grad_beta;

 private:
  Tensor normalized_;
  std::vector<double> inv_std_;
  bool cached_ = false;
};

// ---------------------------------------------------------------------------

enum class ActivationKind { ReLU, LeakyReLU, Identity };

inline constexpr double kLeakySlope = 0.01;

inline std::string to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::LeakyReLU: return "leaky_relu";
    case ActivationKind::Identity: return "identity";
  }
  return "?";
}

/// ReLU / LeakyReLU with derivative 0 (resp. slope) at exactly 0.
class Activation {
 public:
  Activation() = default;
  explicit Activation(ActivationKind kind) : kind_(kind) {}

  ActivationKind kind() const { return kind_; }

  Tensor forward(const Tensor& x) {
    input_ = x;
    Tensor y = x;
    if (kind_ == ActivationKind::Identity) return y;
    const double neg = kind_ == ActivationKind::LeakyReLU ? kLeakySlope : 0.0;
    for (double& v : y.storage()) {
      if (!(v > 0.0)) v *= neg;
    }
    return y;
  }

  Tensor backward(const Tensor& dy) const {
    Tensor dx = dy;
    if (kind_ == ActivationKind::Identity) return dx;
    const double neg = kind_ == ActivationKind::LeakyReLU ? kLeakySlope : 0.0;
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (!(input_[i] > 0.0)) dx[i] *= neg;
    }
    return dx;
  }

 private:
  ActivationKind kind_ = ActivationKind::ReLU;
  Tensor input_;
};

// ---------------------------------------------------------------------------

struct LossResult {
  double loss = 0.0;   ///< mean cross-entropy over the batch
  Tensor grad;         ///< dL/dlogits
  std::size_t correct = 0;
};

inline LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  const std::size_t n = logits.rows(), k = logits.cols();
  if (labels.size() != n) throw StructuralError("loss: label count mismatch");
  LossResult r{0.0, Tensor(n, k), 0};
  for (std::size_t b = 0; b < n; ++b) {
    auto row = logits.row(b);
    double mx = row[0];
    std::size_t arg = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (row[j] > mx) {
        mx = row[j];
        arg = j;
      }
    }
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double log_z = mx + std::log(z);
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= k) throw StructuralError("loss: label out of range");
    const auto y = static_cast<std::size_t>(labels[b]);
    r.loss += log_z - row[y];
    if (arg == y) ++r.correct;
    for (std::size_t j = 0; j < k; ++j) {
      r.grad.at(b, j) = (std::exp(row[j] - log_z) - (j == y ? 1.0 : 0.0)) / static_cast<double>(n);
    }
  }
  r.loss /= static_cast<double>(n);
  return r;
}

}  // namespace collapse_lab::net
