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

#include <map>
#include <string>
#include <vector>

#include "collapse_lab/mc.hpp"
#include "collapse_lab/svg.hpp"
#include "collapse_lab/train.hpp"

// Figures shared by the CLI commands and `report`, so re-plotting from a CSV
// gives the same SVG as the original run.

namespace collapse_lab::plots {

inline std::string k_function(const std::vector<double>& x, const std::vector<double>& k) {
  svg::PlotSpec spec{"K(x)", "x", "K(x)"};
  return svg::render(spec, {{"K(x)", x, k, false}});
}

/// Predicted drift as lines and empirical drift as points, one pair per
/// (γ, β, noise) family, against η.
inline std::string drift_vs_eta(const std::vector<mc::VerifyRow>& rows) {
  std::map<std::string, std::pair<svg::Series, svg::Series>> families;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    const std::string key = r.config.gamma_dist.to_string() + " " + r.config.beta_dist.to_string() + " " +
                            mc::to_string(r.config.noise);
    if (!families.count(key)) {
      order.push_back(key);
      families[key] = {svg::Series{"predicted " + key, {}, {}, false}, svg::Series{"empirical " + key, {}, {}, true}};
    }
    auto& [pred, emp] = families[key];
    pred.x.push_back(r.config.eta);
    pred.y.push_back(r.estimate.predicted);
    emp.x.push_back(r.config.eta);
    emp.y.push_back(r.estimate.empirical_mean);
  }
  std::vector<svg::Series> series;
  for (const auto& k : order) {
    series.push_back(families[k].first);
    series.push_back(families[k].second);
  }
  svg::PlotSpec spec{"One-step activation drift: empirical vs predicted", "learning rate eta", "change in E[Phi(beta/gamma)]"};
  spec.width = 1100;
  return svg::render(spec, series);
}

inline std::string shift_ratio_vs_step(const std::vector<mc::TrajectoryRecord>& records) {
  svg::Series s{"C = (beta+alpha)/|gamma|", {}, {}, false};
  for (const auto& r : records) {
    s.x.push_back(static_cast<double>(r.step));
    s.y.push_back(r.shift_ratio);
  }
  svg::PlotSpec spec{"psBN reactivation under weight decay", "step", "C"};
  return svg::render(spec, {s});
}

inline std::string trajectory_trace(const std::vector<mc::TrajectoryRecord>& records) {
  svg::Series g{"gamma", {}, {}, false}, b{"beta", {}, {}, false};
  for (const auto& r : records) {
    g.x.push_back(static_cast<double>(r.step));
    g.y.push_back(r.gamma);
    b.x.push_back(static_cast<double>(r.step));
    b.y.push_back(r.beta);
  }
  svg::PlotSpec spec{"BN parameter trace under noisy SGD", "step", "value"};
  return svg::render(spec, {g, b});
}

/// Mean over seeds of `metric` per arm and round.
inline std::string experiment_metric(const std::vector<net::ExperimentRow>& rows, bool sparsity) {
  std::map<std::string, std::map<int, std::pair<double, int>>> acc;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (!acc.count(r.arm)) order.push_back(r.arm);
    auto& cell = acc[r.arm][r.report.round_index];
    cell.first += sparsity ? r.report.sparsity.sparsity_ratio : r.report.val_acc;
    cell.second += 1;
  }
  std::vector<svg::Series> series;
  for (const auto& arm : order) {
    svg::Series s{arm, {}, {}, false};
    for (const auto& [round, cell] : acc[arm]) {
      s.x.push_back(round);
      s.y.push_back(cell.first / cell.second);
    }
    series.push_back(s);
  }
  svg::PlotSpec spec{sparsity ? "Sparsity vs training round" : "Validation accuracy vs training round", "round",
                     sparsity ? "sparsity ratio (|gamma| < threshold)" : "validation accuracy"};
  return svg::render(spec, series);
}

}  // namespace collapse_lab::plots
