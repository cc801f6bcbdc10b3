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

// Predicted vs simulated one-step drift of E[Φ(β/γ)] for a few learning rates.

#include <cstdio>

#include "collapse_lab/analytic.hpp"
#include "collapse_lab/mc.hpp"

using namespace collapse_lab;

int main() {
  const auto gamma = ScalarDist::uniform(0.5, 1.5);
  const auto beta = ScalarDist::uniform(-1.0, 1.0);
  const mc::EnsembleSpec ensemble{gamma, beta, 1'000'000};

  std::printf("%8s %14s %14s %12s\n", "eta", "predicted", "simulated", "std_error");
  for (double eta : {0.005, 0.01, 0.02, 0.05}) {
    const auto cfg = mc::UpdateConfig::make(eta, 1.0, mc::NoiseKind::Normal, 0.0, 0.0, 7);
    const auto est = mc::one_step_drift(ensemble, cfg);
    std::printf("%8.3f %14.6e %14.6e %12.3e\n", eta, est.predicted, est.empirical_mean, est.std_error);
  }
}
