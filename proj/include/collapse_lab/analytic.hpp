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
#include <string>
#include <vector>

#include "collapse_lab/dist.hpp"
#include "collapse_lab/errors.hpp"
#include "collapse_lab/normal.hpp"
#include "collapse_lab/quadrature.hpp"

// Closed-form and quadrature evaluation of the one-step activation drift of
// a BN+ReLU unit under noisy SGD:
//
//   E[Φ(β'/γ')] − E[Φ(β/γ)] = (η²c²/2) ∫ γ⁻² P(γ) J(γ) dγ
//   J(γ) = ∫ K(β/γ) P(β) dβ
//   K(x) = (x⁴ − 2) φ(x)² + (x − x³) φ(x) Φ(x)

namespace collapse_lab::analytic {

/// Smallest admissible lower edge of a γ distribution's support.
inline constexpr double kGammaMin = 0.05;

/// ∫_{-∞}^{y} x φ(x) dx = −φ(y).
inline double g_closed(double y) { return -std_normal_pdf(y); }

/// ∫_{-y}^{∞} x² φ(x) dx = −y φ(y) + Φ(y).
inline double h_tail_closed(double y) { return -y * std_normal_pdf(y) + std_normal_cdf(y); }

inline double k_fn(double x) {
  const double p = std_normal_pdf(x);
  const double cdf = std_normal_cdf(x);
  const double x2 = x * x;
  return (x2 * x2 - 2.0) * p * p + (x - x2 * x) * p * cdf;
}

/// Numeric ∫_{-R}^{y} x^power φ(x) dx, R the truncation radius. Serves as the
/// independent route for g_closed / h_tail_closed.
inline double partial_moment_numeric(int power, double y, const QuadratureSpec& quad = {}) {
  require_finite(y, "partial_moment_numeric");
  if (power != 1 && power != 2) throw DomainError("partial_moment_numeric: power must be 1 or 2");
  quad.validate();
  const double lo = -quad.truncation_radius;
  const double hi = std::min(y, quad.truncation_radius);
  if (hi <= lo) return 0.0;
  auto f = [power](double x) { return (power == 1 ? x : x * x) * std_normal_pdf(x); };
  return integrate(f, lo, hi, quad);
}

/// Density of a·X at z, i.e. f_X(z/a)/|a|.
inline double scaled_density(const ScalarDist& dist, double a, double z) {
  require_finite(a, "scaled_density.a");
  require_finite(z, "scaled_density.z");
  if (a == 0.0) throw DomainError("scaled_density: scale a must be nonzero");
  if (dist.is_point()) throw UnsupportedError("scaled_density: point mass has no density");
  return dist.density(z / a) / std::abs(a);
}

/// J(γ) = E_β[K(β/γ)]. A PointMass β collapses to a single K evaluation.
/// Regions where |β/γ| exceeds the truncation radius are dropped
/// (|K| < 3e-12 there).
inline double j_fn(double gamma, const ScalarDist& beta_dist, const QuadratureSpec& quad = {}) {
  require_finite(gamma, "j_fn.gamma");
  if (gamma == 0.0) throw SingularityError("j_fn: gamma must be nonzero");
  quad.validate();
  const double r = quad.truncation_radius;
  const double ag = std::abs(gamma);
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return k_fn(d.value / gamma);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          // u = β/γ; dβ = |γ| du.
          double ulo = std::max(std::min(d.lo / gamma, d.hi / gamma), -r);
          double uhi = std::min(std::max(d.lo / gamma, d.hi / gamma), r);
          if (uhi <= ulo) return 0.0;
          const double dens = ag / (d.hi - d.lo);
          return dens * integrate([](double u) { return k_fn(u); }, ulo, uhi, quad);
        } else {
          // β = mean + sd·z, z standard normal; keep z where |β/γ| ≤ r.
          double zlo = (-r * ag - d.mean) / d.sd;
          double zhi = (r * ag - d.mean) / d.sd;
          zlo = std::max(zlo, -r);
          zhi = std::min(zhi, r);
          if (zhi <= zlo) return 0.0;
          auto f = [&](double z) { return k_fn((d.mean + d.sd * z) / gamma) * std_normal_pdf(z); };
          return integrate(f, zlo, zhi, quad.panels_for(zhi - zlo) * 2);
        }
      },
      beta_dist.kind());
}

/// Rejects γ distributions whose support reaches below kGammaMin.
inline void require_gamma_support(const ScalarDist& gamma_dist) {
  const double lo = gamma_dist.support_lo();
  if (!(lo >= kGammaMin)) {
    throw SingularityError("gamma distribution " + gamma_dist.to_string() +
                           ": support must lie in [0.05, inf) (1/gamma^2 is not integrable at 0)");
  }
}

/// ∫ γ⁻² P(γ) J(γ) dγ, the η- and c-free factor of the drift.
inline double drift_integral(const ScalarDist& gamma_dist, const ScalarDist& beta_dist,
                             const QuadratureSpec& quad = {}) {
  require_gamma_support(gamma_dist);
  quad.validate();
  if (const auto* pm = std::get_if<PointMass>(&gamma_dist.kind())) {
    return j_fn(pm->value, beta_dist, quad) / (pm->value * pm->value);
  }
  const auto& u = std::get<Uniform>(gamma_dist.kind());
  const double dens = 1.0 / (u.hi - u.lo);
  auto f = [&](double g) { return dens * j_fn(g, beta_dist, quad) / (g * g); };
  return integrate(f, u.lo, u.hi, quad);
}

struct DriftPrediction {
  double value = 0.0;  ///< predicted one-step change of E[Φ(β/γ)]
  double eta = 0.0;
  double c = 0.0;
  ScalarDist gamma_dist;
  ScalarDist beta_dist;
  bool beta_even = true;  ///< the sign guarantee only holds when true
};

inline DriftPrediction drift_prediction(double eta, double c, const ScalarDist& gamma_dist,
                                        const ScalarDist& beta_dist, const QuadratureSpec& quad = {}) {
  require_finite(eta, "drift_prediction.eta");
  require_finite(c, "drift_prediction.c");
  if (eta < 0.0 || c < 0.0) throw DomainError("drift_prediction: eta and c must be >= 0");
  DriftPrediction out{0.0, eta, c, gamma_dist, beta_dist, beta_dist.is_even()};
  const double integral = drift_integral(gamma_dist, beta_dist, quad);
  out.value = 0.5 * (eta * eta) * (c * c) * integral;
  return out;
}

struct Interval {
  double lo;
  double hi;
};

/// Maximal sub-intervals of [lo, hi] on which K(x) > 0, located by a grid
/// scan plus bisection of each sign change to 1e-14.
inline std::vector<Interval> k_positive_intervals(double lo = -8.0, double hi = 8.0, double step = 1e-3) {
  auto refine = [](double a, double b) {
    const bool fa = k_fn(a) > 0.0;
    for (int i = 0; i < 200 && b - a > 1e-14; ++i) {
      double m = 0.5 * (a + b);
      if ((k_fn(m) > 0.0) == fa) a = m; else b = m;
    }
    return 0.5 * (a + b);
  };
  std::vector<Interval> out;
  const long n = static_cast<long>(std::ceil((hi - lo) / step));
  double prev_x = lo;
  bool prev_pos = k_fn(lo) > 0.0;
  double start = lo;
  for (long i = 1; i <= n; ++i) {
    double x = std::min(hi, lo + step * i);
    bool pos = k_fn(x) > 0.0;
    if (pos != prev_pos) {
      double root = refine(prev_x, x);
      if (pos) start = root; else out.push_back({start, root});
    }
    prev_pos = pos;
    prev_x = x;
  }
  if (prev_pos) out.push_back({start, hi});
  return out;
}

}  // namespace collapse_lab::analytic
