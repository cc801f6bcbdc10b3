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
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <utility>

#include "collapse_lab/errors.hpp"

namespace collapse_lab {

/// Composite Gauss-Legendre integration over a finite window.
///
/// `panels` is the panel count used across the whole truncation window
/// [-truncation_radius, truncation_radius]; shorter intervals get a
/// proportional share (see panels_for).
struct QuadratureSpec {
  double truncation_radius = 8.0;
  int panels = 2048;

  void validate() const {
    if (!(truncation_radius >= 6.0)) throw DomainError("quadrature: truncation_radius must be >= 6");
    if (panels < 1) throw DomainError("quadrature: panels must be positive");
  }

  QuadratureSpec doubled() const { return {truncation_radius, panels * 2}; }

  /// Panel count for an interval of the given length.
  int panels_for(double length) const {
    double share = std::ceil(panels * length / (2.0 * truncation_radius));
    return std::max(8, static_cast<int>(std::min(share, 1e8)));
  }
};

namespace detail {

inline constexpr int kGaussOrder = 8;

struct GaussRule {
  std::array<double, kGaussOrder> nodes{};
  std::array<double, kGaussOrder> weights{};
};

/// Nodes and weights on [-1, 1] by Newton iteration on P_n.
inline GaussRule make_gauss_legendre() {
  GaussRule rule;
  constexpr int n = kGaussOrder;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      double z_prev = z;
      z = z_prev - p0 / dp;
      if (std::abs(z - z_prev) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

inline const GaussRule& gauss_legendre() {
  static const GaussRule rule = make_gauss_legendre();
  return rule;
}

}  // namespace detail

/// ∫_lo^hi f(x) dx with `panels` equal panels of the fixed Gauss rule.
/// Panel sums are accumulated with Neumaier compensation.
template <class F>
double integrate(F&& f, double lo, double hi, int panels) {
  if (hi == lo) return 0.0;
  const auto& rule = detail::gauss_legendre();
  const double width = (hi - lo) / panels;
  double sum = 0.0, comp = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + width * p;
    const double mid = a + 0.5 * width;
    double panel = 0.0;
    for (int k = 0; k < detail::kGaussOrder; ++k) {
      panel += rule.weights[k] * f(mid + 0.5 * width * rule.nodes[k]);
    }
    panel *= 0.5 * width;
    double t = sum + panel;
    comp += std::abs(sum) >= std::abs(panel) ? (sum - t) + panel : (panel - t) + sum;
    sum = t;
  }
  return sum + comp;
}

template <class F>
double integrate(F&& f, double lo, double hi, const QuadratureSpec& quad) {
  return integrate(std::forward<F>(f), lo, hi, quad.panels_for(hi - lo));
}

}  // namespace collapse_lab
