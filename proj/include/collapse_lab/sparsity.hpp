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
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "collapse_lab/csv.hpp"
#include "collapse_lab/errors.hpp"
#include "collapse_lab/layers.hpp"
#include "collapse_lab/model.hpp"
#include "json.hpp"

namespace collapse_lab::sparsity {

inline constexpr double kDefaultThreshold = 1e-3;

struct LayerSparsity {
  std::string layer_id;
  std::size_t total_channels = 0;
  std::size_t collapsed_channels = 0;

  friend bool operator==(const LayerSparsity&, const LayerSparsity&) = default;
};

struct SparsityReport {
  std::vector<LayerSparsity> per_layer;
  double sparsity_ratio = 0.0;
  std::uint64_t flops_total = 0;
  std::uint64_t flops_after_prune = 0;
  double flops_reduction = 0.0;
  double threshold = kDefaultThreshold;

  friend bool operator==(const SparsityReport&, const SparsityReport&) = default;
};

/// Channels with |γ| < threshold.
inline std::vector<std::size_t> collapsed_channels(const net::BnLayerState& bn, double threshold = kDefaultThreshold) {
  if (!(threshold > 0.0)) throw DomainError("collapsed_channels: threshold must be > 0");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bn.gamma.size(); ++i) {
    if (std::abs(bn.gamma[i]) < threshold) out.push_back(i);
  }
  return out;
}

/// Per output unit, the L1 norm of its incoming weights plus |bias|.
inline std::vector<double> unit_l1_norms(const net::Dense& d) {
  std::vector<double> norms(d.out(), 0.0);
  for (std::size_t i = 0; i < d.in(); ++i) {
    for (std::size_t o = 0; o < d.out(); ++o) norms[o] += std::abs(d.weight.at(i, o));
  }
  if (d.has_bias) {
    for (std::size_t o = 0; o < d.out(); ++o) norms[o] += std::abs(d.bias[o]);
  }
  return norms;
}

/// FLOPS accounting over a chain of dense layers with widths
/// w_0 → w_1 → … → w_L. `collapsed[k]` lists removed units of hidden layer k
/// (the output of dense layer k). A removed unit drops its output column in
/// layer k and its input row in layer k+1; a dense layer costs 2·in·out.
inline SparsityReport flops_reduction(std::span<const std::size_t> widths,
                                      const std::vector<std::vector<std::size_t>>& collapsed,
                                      double threshold = kDefaultThreshold) {
  if (widths.size() < 2) throw StructuralError("flops_reduction: chain needs at least two widths");
  const std::size_t hidden = widths.size() - 2;
  if (collapsed.size() != hidden) throw StructuralError("flops_reduction: collapsed map must cover every hidden layer");
  SparsityReport r;
  r.threshold = threshold;
  std::vector<std::size_t> removed(widths.size(), 0);
  std::size_t total = 0, dead = 0;
  for (std::size_t k = 0; k < hidden; ++k) {
    const std::size_t width = widths[k + 1];
    std::set<std::size_t> uniq(collapsed[k].begin(), collapsed[k].end());
    if (uniq.size() != collapsed[k].size()) throw StructuralError("flops_reduction: duplicate channel index");
    if (!uniq.empty() && *uniq.rbegin() >= width) throw StructuralError("flops_reduction: channel index out of range");
    removed[k + 1] = uniq.size();
    r.per_layer.push_back({"hidden" + std::to_string(k), width, uniq.size()});
    total += width;
    dead += uniq.size();
  }
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const std::uint64_t in = widths[k], out = widths[k + 1];
    r.flops_total += 2 * in * out;
    r.flops_after_prune += 2 * (in - removed[k]) * (out - removed[k + 1]);
  }
  r.sparsity_ratio = total ? static_cast<double>(dead) / static_cast<double>(total) : 0.0;
  r.flops_reduction = r.flops_total ? 1.0 - static_cast<double>(r.flops_after_prune) / static_cast<double>(r.flops_total) : 0.0;
  return r;
}

/// Collapsed map of a trained model: |γ| < threshold for BN/psBN models,
/// incoming-weight L1 norm < threshold for models without normalization.
inline std::vector<std::vector<std::size_t>> collapsed_map(const net::Mlp& model, double threshold = kDefaultThreshold) {
  std::vector<std::vector<std::size_t>> map;
  for (std::size_t l = 0; l < model.depth(); ++l) {
    if (model.has_norm()) {
      map.push_back(collapsed_channels(model.norms()[l].state, threshold));
    } else {
      std::vector<std::size_t> idx;
      auto norms = unit_l1_norms(model.dense()[l]);
      for (std::size_t i = 0; i < norms.size(); ++i) {
        if (norms[i] < threshold) idx.push_back(i);
      }
      map.push_back(std::move(idx));
    }
  }
  return map;
}

inline SparsityReport model_sparsity(const net::Mlp& model, double threshold = kDefaultThreshold) {
  auto widths = model.widths();
  return flops_reduction(widths, collapsed_map(model, threshold), threshold);
}

/// Zeroes γ, β and the outgoing weights of every collapsed channel.
/// Returns the number of channels pruned.
inline std::size_t prune_collapsed(net::Mlp& model, double threshold = kDefaultThreshold) {
  auto map = collapsed_map(model, threshold);
  std::size_t count = 0;
  for (std::size_t l = 0; l < map.size(); ++l) {
    net::Dense& next = l + 1 < model.depth() ? model.dense()[l + 1] : model.head();
    for (std::size_t ch : map[l]) {
      if (model.has_norm()) {
        model.norms()[l].state.gamma[ch] = 0.0;
        model.norms()[l].state.beta[ch] = 0.0;
      }
      auto row = next.weight.row(ch);
      std::fill(row.begin(), row.end(), 0.0);
      ++count;
    }
  }
  return count;
}

// ---------------------------------------------------------------------------
// L1 histogram

struct HistogramBin {
  double lo;
  double hi;
  std::uint64_t count;
};

inline constexpr double kHistogramFloor = 1e-9;
inline constexpr int kHistogramBins = 64;

/// Bin 0 is the underflow bin [0, 1e-9); bin k ≥ 1 covers
/// [1e-9·2^(k−1), 1e-9·2^k). Values past the top edge land in the last bin.
/// Doubling every input moves each count up exactly one bin.
inline std::vector<HistogramBin> filter_l1_histogram(std::span<const double> l1_norms) {
  std::vector<HistogramBin> bins;
  bins.push_back({0.0, kHistogramFloor, 0});
  for (int k = 0; k < kHistogramBins; ++k) {
    bins.push_back({std::ldexp(kHistogramFloor, k), std::ldexp(kHistogramFloor, k + 1), 0});
  }
  for (double v : l1_norms) {
    if (!(v >= kHistogramFloor)) {
      ++bins[0].count;
      continue;
    }
    std::size_t k = 1;
    while (k + 1 < bins.size() && v >= bins[k].hi) ++k;
    ++bins[k].count;
  }
  return bins;
}

/// Per-unit L1 norms of the effective filters. With normalization the
/// inference-time scale |γ|/sqrt(running_var + eps) is folded into the
/// incoming weights, so a collapsed channel sits near zero.
inline std::vector<double> model_filter_l1(const net::Mlp& model) {
  std::vector<double> all;
  for (std::size_t l = 0; l < model.depth(); ++l) {
    auto n = unit_l1_norms(model.dense()[l]);
    if (model.has_norm()) {
      const auto& st = model.norms()[l].state;
      for (std::size_t j = 0; j < n.size(); ++j) {
        n[j] *= std::abs(st.gamma[j]) / std::sqrt(st.running_var[j] + st.eps);
      }
    }
    all.insert(all.end(), n.begin(), n.end());
  }
  return all;
}

inline std::vector<HistogramBin> model_l1_histogram(const net::Mlp& model) {
  return filter_l1_histogram(model_filter_l1(model));
}

// ---------------------------------------------------------------------------
// Serialization

inline CsvTable to_csv(const SparsityReport& r) {
  CsvTable t;
  t.header = {"layer_id", "total_channels", "collapsed_channels", "threshold", "flops_total", "flops_after_prune"};
  for (const auto& l : r.per_layer) {
    t.rows.push_back({l.layer_id, std::to_string(l.total_channels), std::to_string(l.collapsed_channels),
                      fmt_num(r.threshold), std::to_string(r.flops_total), std::to_string(r.flops_after_prune)});
  }
  return t;
}

inline SparsityReport report_from_csv(const CsvTable& t) {
  SparsityReport r;
  std::size_t total = 0, dead = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    LayerSparsity l{t.get(i, "layer_id"), std::stoull(t.get(i, "total_channels")),
                    std::stoull(t.get(i, "collapsed_channels"))};
    total += l.total_channels;
    dead += l.collapsed_channels;
    r.per_layer.push_back(l);
    r.threshold = t.get_double(i, "threshold");
    r.flops_total = std::stoull(t.get(i, "flops_total"));
    r.flops_after_prune = std::stoull(t.get(i, "flops_after_prune"));
  }
  r.sparsity_ratio = total ? static_cast<double>(dead) / static_cast<double>(total) : 0.0;
  r.flops_reduction = r.flops_total ? 1.0 - static_cast<double>(r.flops_after_prune) / static_cast<double>(r.flops_total) : 0.0;
  return r;
}

inline nlohmann::json to_json(const SparsityReport& r) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : r.per_layer) {
    layers.push_back({{"layer_id", l.layer_id}, {"total_channels", l.total_channels}, {"collapsed_channels", l.collapsed_channels}});
  }
  return {{"per_layer", layers},           {"sparsity_ratio", r.sparsity_ratio},
          {"flops_total", r.flops_total},   {"flops_after_prune", r.flops_after_prune},
          {"flops_reduction", r.flops_reduction}, {"threshold", r.threshold}};
}

inline SparsityReport report_from_json(const nlohmann::json& j) {
  SparsityReport r;
  for (const auto& l : j.at("per_layer")) {
    r.per_layer.push_back({l.at("layer_id").get<std::string>(), l.at("total_channels").get<std::size_t>(),
                           l.at("collapsed_channels").get<std::size_t>()});
  }
  r.sparsity_ratio = j.at("sparsity_ratio").get<double>();
  r.flops_total = j.at("flops_total").get<std::uint64_t>();
  r.flops_after_prune = j.at("flops_after_prune").get<std::uint64_t>();
  r.flops_reduction = j.at("flops_reduction").get<double>();
  r.threshold = j.at("threshold").get<double>();
  return r;
}

inline CsvTable histogram_csv(const std::vector<HistogramBin>& bins) {
  CsvTable t;
  t.header = {"bin_lo", "bin_hi", "count"};
  for (const auto& b : bins) t.rows.push_back({fmt_num(b.lo), fmt_num(b.hi), std::to_string(b.count)});
  return t;
}

}  // namespace collapse_lab::sparsity
