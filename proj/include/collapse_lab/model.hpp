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

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "collapse_lab/errors.hpp"
#include "collapse_lab/layers.hpp"
#include "collapse_lab/tensor.hpp"

namespace collapse_lab::net {

enum class NormKind { None, BN, PsBN };

inline std::string to_string(NormKind k) {
  switch (k) {
    case NormKind::None: return "none";
    case NormKind::BN: return "bn";
    case NormKind::PsBN: return "psbn";
  }
  return "?";
}

struct ModelSpec {
  std::size_t input_dim = 32;
  std::size_t classes = 10;
  std::vector<std::size_t> hidden = {128, 128, 128};
  NormKind norm = NormKind::BN;
  double alpha = 0.1;  ///< psBN shift, used only when norm == PsBN
  ActivationKind activation = ActivationKind::ReLU;
  double gamma_init = 1.0;
};

/// Hidden blocks of dense → BN/psBN/none → activation, then a dense head.
/// Dense layers feeding a BN layer carry no bias (β plays that role).
class Mlp {
 public:
  Mlp() = default;

  template <class Urbg>
  Mlp(const ModelSpec& spec, Urbg& gen) : spec_(spec) {
    if (spec.hidden.empty()) throw StructuralError("mlp: needs at least one hidden layer");
    std::size_t in = spec.input_dim;
    for (std::size_t width : spec.hidden) {
      Dense d(in, width, spec.norm == NormKind::None);
      d.init(gen);
      dense_.push_back(std::move(d));
      if (spec.norm != NormKind::None) {
        const double alpha = spec.norm == NormKind::PsBN ? spec.alpha : 0.0;
        norms_.emplace_back(BnLayerState::make(width, spec.gamma_init, alpha));
      }
      acts_.emplace_back(spec.activation);
      in = width;
    }
    head_ = Dense(in, spec.classes, true);
    head_.init(gen);
  }

  const ModelSpec& spec() const { return spec_; }
  bool has_norm() const { return !norms_.empty(); }
  std::size_t depth() const { return dense_.size(); }

  Tensor forward(const Tensor& x, Mode mode) {
    Tensor h = x;
    for (std::size_t l = 0; l < dense_.size(); ++l) {
      h = dense_[l].forward(h);
      if (has_norm()) h = norms_[l].forward(h, mode);
      h = acts_[l].forward(h);
      debug_check_finite(h, "mlp hidden");
    }
    return head_.forward(h);
  }

  void backward(const Tensor& dlogits) {
    Tensor g = head_.backward(dlogits);
    for (std::size_t l = dense_.size(); l-- > 0;) {
      g = acts_[l].backward(g);
      if (has_norm()) g = norms_[l].backward(g).grad_in;
      g = dense_[l].backward(g);
    }
  }

  void zero_grad() {
    for (auto& d : dense_) d.zero_grad();
    for (auto& n : norms_) n.zero_grad();
    head_.zero_grad();
  }

  std::vector<ParamRef> params() {
    std::vector<ParamRef> out;
    auto add_dense = [&](Dense& d, const std::string& name) {
      out.push_back({name + ".weight", d.weight.flat(), d.grad_weight.flat()});
      if (d.has_bias) out.push_back({name + ".bias", d.bias.flat(), d.grad_bias.flat()});
    };
    for (std::size_t l = 0; l < dense_.size(); ++l) {
      add_dense(dense_[l], "dense" + std::to_string(l));
      if (has_norm()) {
        out.push_back({"bn" + std::to_string(l) + ".gamma", norms_[l].state.gamma, norms_[l].grad_gamma});
        out.push_back({"bn" + std::to_string(l) + ".beta", norms_[l].state.beta, norms_[l].grad_beta});
      }
    }
    add_dense(head_, "head");
    return out;
  }

  std::vector<Dense>& dense() { return dense_; }
  const std::vector<Dense>& dense() const { return dense_; }
  std::vector<BatchNorm>& norms() { return norms_; }
  const std::vector<BatchNorm>& norms() const { return norms_; }
  Dense& head() { return head_; }
  const Dense& head() const { return head_; }

  /// Layer widths of the dense chain: input, hidden..., classes.
  std::vector<std::size_t> widths() const {
    std::vector<std::size_t> w{spec_.input_dim};
    for (auto h : spec_.hidden) w.push_back(h);
    w.push_back(spec_.classes);
    return w;
  }

 private:
  ModelSpec spec_;
  std::vector<Dense> dense_;
  std::vector<BatchNorm> norms_;
  std::vector<Activation> acts_;
  Dense head_;
};

/// SGD with momentum and coupled weight decay on every parameter:
///   v ← μ·v + (g + λ·θ),   θ ← θ − η·v
class Sgd {
 public:
  Sgd(double momentum, double weight_decay) : momentum_(momentum), weight_decay_(weight_decay) {}

  void step(const std::vector<ParamRef>& params, double lr) {
    if (buffers_.size() != params.size()) {
      buffers_.clear();
      for (const auto& p : params) buffers_.emplace_back(p.value.size(), 0.0);
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto value = params[k].value;
      auto grad = params[k].grad;
      auto& buf = buffers_[k];
      for (std::size_t i = 0; i < value.size(); ++i) {
        const double g = grad[i] + weight_decay_ * value[i];
        buf[i] = momentum_ * buf[i] + g;
        value[i] -= lr * buf[i];
      }
    }
  }

  void reset() { buffers_.clear(); }

 private:
  double momentum_;
  double weight_decay_;
  std::vector<std::vector<double>> buffers_;
};

/// Cosine annealing within one round: η_max at t = 0, η_min at t = T.
inline double cosine_lr(double eta_max, double eta_min, std::size_t t, std::size_t total) {
  if (total == 0) return eta_max;
  const double frac = static_cast<double>(t) / static_cast<double>(total);
  return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace collapse_lab::net
