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
#include <functional>
#include <random>
#include <span>

#include "collapse_lab/layers.hpp"

namespace collapse_lab::testing {

inline constexpr double kFdStep = 1e-3;

inline net::Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  net::Tensor t(r, c);
  for (double& v : t.storage()) v = nd(gen);
  return t;
}

// |a − n| / max(|a|, |n|), with a floor on the denominator so that entries
// that are zero analytically compare absolutely.
inline double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); }

// Central difference of `loss` with respect to every entry of `values`,
// compared against `analytic`. Returns the worst relative error.
inline double fd_check(std::span<double> values, std::span<const double> analytic, const std::function<double()>& loss) {
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double keep = values[i];
    values[i] = keep + kFdStep;
    const double up = loss();
    values[i] = keep - kFdStep;
    const double dn = loss();
    values[i] = keep;
    worst = std::max(worst, rel_err(analytic[i], (up - dn) / (2.0 * kFdStep)));
  }
  return worst;
}

inline double dot(const net::Tensor& a, const net::Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace collapse_lab::testing
