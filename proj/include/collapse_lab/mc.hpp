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
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "collapse_lab/analytic.hpp"
#include "collapse_lab/csv.hpp"
#include "collapse_lab/dist.hpp"
#include "collapse_lab/errors.hpp"
#include "collapse_lab/parallel.hpp"

// Monte Carlo simulation of a single BN+ReLU unit's (γ, β) under SGD with
// independent noisy output gradients:
//
//   Δβ = −η·g·H(γx̂ + β + α),   Δγ = x̂·Δβ,   H(0) = 0
//
// followed by coupled weight decay γ ← γ(1−ηλ), β ← β(1−ηλ).

namespace collapse_lab::mc {

enum class NoiseKind { Normal, Uniform };

inline std::string to_string(NoiseKind k) { return k == NoiseKind::Normal ? "normal" : "uniform"; }

inline NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "normal") return NoiseKind::Normal;
  if (s == "uniform") return NoiseKind::Uniform;
  throw ConfigError("noise: expected 'normal' or 'uniform', got '" + s + "'");
}

/// Zero-mean gradient noise with standard deviation c.
inline ScalarDist gradient_noise(NoiseKind kind, double c) {
  if (c == 0.0) return ScalarDist::point(0.0);
  if (kind == NoiseKind::Normal) return ScalarDist::normal(0.0, c);
  const double half = c * std::sqrt(3.0);
  return ScalarDist::uniform(-half, half);
}

struct UpdateConfig {
  double eta = 0.0;
  double c = 0.0;
  ScalarDist noise_dist;  ///< mean 0, sd c
  double weight_decay = 0.0;
  double alpha = 0.0;  ///< psBN shift; 0 is plain BN
  std::uint64_t seed = 0;

  static UpdateConfig make(double eta, double c, NoiseKind noise = NoiseKind::Normal,
                           double weight_decay = 0.0, double alpha = 0.0, std::uint64_t seed = 0) {
    UpdateConfig cfg;
    cfg.eta = eta;
    cfg.c = c;
    cfg.weight_decay = weight_decay;
    cfg.alpha = alpha;
    cfg.seed = seed;
    cfg.noise_dist = c > 0.0 ? gradient_noise(noise, c) : ScalarDist::point(0.0);
    cfg.validate();
    return cfg;
  }

  void validate() const {
    require_finite(eta, "eta");
    require_finite(c, "c");
    require_finite(weight_decay, "weight_decay");
    require_finite(alpha, "alpha");
    if (eta < 0.0) throw DomainError("eta must be >= 0");
    if (c < 0.0) throw DomainError("c must be >= 0");
    if (weight_decay < 0.0) throw DomainError("weight_decay must be >= 0");
    if (alpha < 0.0 || alpha > 1.0) throw DomainError("alpha must lie in [0, 1]");
    if (eta * weight_decay >= 1.0) throw DomainError("eta * weight_decay must be < 1");
    if (noise_dist.mean() != 0.0) throw DomainError("gradient noise must have mean 0");
    if (std::abs(noise_dist.sd() - c) > 1e-12 * std::max(1.0, c)) {
      throw DomainError("gradient noise sd must equal c");
    }
  }
};

struct BnDelta {
  double d_gamma = 0.0;
  double d_beta = 0.0;
};

/// One SGD step on (γ, β) for a single input x̂ and output gradient `grad`.
inline BnDelta update_step(double gamma, double beta, double x_hat, double grad, const UpdateConfig& cfg) {
  const double pre = gamma * x_hat + beta + cfg.alpha;
  if (!(pre > 0.0)) return {};
  const double d_beta = -cfg.eta * grad;
  return {x_hat * d_beta, d_beta};
}

/// Coupled L2 shrink applied after the gradient step.
inline void apply_weight_decay(double& gamma, double& beta, const UpdateConfig& cfg) {
  if (cfg.weight_decay == 0.0) return;
  const double keep = 1.0 - cfg.eta * cfg.weight_decay;
  gamma *= keep;
  beta *= keep;
}

/// P(γx̂ + b > 0) for x̂ ~ N(0,1), with b = β + α. Defined for any sign of γ.
inline double activation_probability(double gamma, double beta, double alpha = 0.0) {
  const double b = beta + alpha;
  if (gamma == 0.0) return b > 0.0 ? 1.0 : 0.0;
  return analytic::std_normal_cdf(b / std::abs(gamma));
}

// ---------------------------------------------------------------------------
// Ensembles

struct EnsembleSpec {
  ScalarDist gamma_dist;
  ScalarDist beta_dist;
  std::uint64_t count = 0;
};

struct NeuronEnsemble {
  std::vector<double> gamma;
  std::vector<double> beta;

  std::size_t count() const { return gamma.size(); }
};

inline constexpr std::size_t kChunk = 1 << 16;

inline std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

/// Draws (γ, β) for every neuron; deterministic in `seed`, independent of
/// the thread count.
inline NeuronEnsemble sample_ensemble(const EnsembleSpec& spec, std::uint64_t seed, int threads = thread_cap()) {
  if (spec.count == 0) throw DomainError("ensemble count must be positive");
  if (spec.gamma_dist.support_lo() <= 0.0) throw DomainError("ensemble gamma must be > 0 at initialization");
  NeuronEnsemble e;
  e.gamma.resize(spec.count);
  e.beta.resize(spec.count);
  parallel_for(chunk_count(spec.count), threads, [&](std::size_t ci) {
    std::mt19937_64 gen(chunk_seed(seed, ci));
    DistSampler gs(spec.gamma_dist), bs(spec.beta_dist);
    const std::size_t end = std::min<std::size_t>(spec.count, (ci + 1) * kChunk);
    for (std::size_t i = ci * kChunk; i < end; ++i) {
      e.gamma[i] = gs(gen);
      e.beta[i] = bs(gen);
    }
  });
  return e;
}

/// Applies one update (fresh x̂ and gradient per neuron) plus weight decay to
/// every neuron. `step` selects the random stream, so repeated calls with
/// increasing step numbers form a reproducible trajectory.
inline void ensemble_step(NeuronEnsemble& e, const UpdateConfig& cfg, std::uint64_t step,
                          int threads = thread_cap()) {
  const std::uint64_t step_seed = chunk_seed(cfg.seed, step);
  parallel_for(chunk_count(e.count()), threads, [&](std::size_t ci) {
    std::mt19937_64 gen(chunk_seed(step_seed, ci));
    std::normal_distribution<double> xhat(0.0, 1.0);
    DistSampler noise(cfg.noise_dist);
    const std::size_t end = std::min(e.count(), (ci + 1) * kChunk);
    for (std::size_t i = ci * kChunk; i < end; ++i) {
      const double x = xhat(gen);
      const double g = noise(gen);
      auto d = update_step(e.gamma[i], e.beta[i], x, g, cfg);
      e.gamma[i] += d.d_gamma;
      e.beta[i] += d.d_beta;
      apply_weight_decay(e.gamma[i], e.beta[i], cfg);
      if (!std::isfinite(e.gamma[i]) || !std::isfinite(e.beta[i])) {
        throw DivergenceError("ensemble_step: non-finite state at neuron " + std::to_string(i));
      }
    }
  });
}

// ---------------------------------------------------------------------------
// One-step drift

struct DriftEstimate {
  double empirical_mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  double predicted = 0.0;
  bool agree = false;  ///< |empirical − predicted| ≤ 3·std_error
  bool beta_even = true;
  std::uint64_t crossed_nonpositive = 0;  ///< neurons whose γ' ≤ 0 after the step
};

namespace detail {

inline double cdf_ratio(double b, double g) {
  if (g == 0.0) return b > 0.0 ? 1.0 : (b < 0.0 ? 0.0 : 0.5);
  return analytic::std_normal_cdf(b / g);
}

}  // namespace detail

/// Empirical one-step change of E[Φ(β/γ)] next to its analytic prediction.
///
/// Each neuron draws (γ, β, x̂, g) and is stepped twice, once with g and
/// once with −g; the pair's mean change is one sample. The noise is
/// symmetric, so the pairing leaves the expectation unchanged while
/// cancelling the O(η) term that otherwise dominates the variance.
/// Φ(β'/γ') is used as-is when γ' ≤ 0; those neurons are counted.
inline DriftEstimate one_step_drift(const EnsembleSpec& spec, const UpdateConfig& cfg,
                                    const QuadratureSpec& quad = {}, int threads = thread_cap()) {
  cfg.validate();
  if (spec.count < 10000) throw DomainError("one_step_drift: count must be >= 1e4");
  if (cfg.alpha != 0.0) throw DomainError("one_step_drift: models plain BN, alpha must be 0");
  analytic::require_gamma_support(spec.gamma_dist);

  const std::size_t chunks = chunk_count(spec.count);
  std::vector<Moments> partial(chunks);
  std::vector<std::uint64_t> crossed(chunks, 0);
  parallel_for(chunks, threads, [&](std::size_t ci) {
    std::mt19937_64 gen(chunk_seed(cfg.seed, ci));
    DistSampler gs(spec.gamma_dist), bs(spec.beta_dist), noise(cfg.noise_dist);
    std::normal_distribution<double> xhat(0.0, 1.0);
    const std::size_t end = std::min<std::size_t>(spec.count, (ci + 1) * kChunk);
    Moments m;
    std::uint64_t cross = 0;
    for (std::size_t i = ci * kChunk; i < end; ++i) {
      const double gamma = gs(gen);
      const double beta = bs(gen);
      const double x = xhat(gen);
      const double g = noise(gen);
      const double before = analytic::std_normal_cdf(beta / gamma);
      const auto up = update_step(gamma, beta, x, g, cfg);
      const auto dn = update_step(gamma, beta, x, -g, cfg);
      const double g_up = gamma + up.d_gamma, g_dn = gamma + dn.d_gamma;
      cross += (g_up <= 0.0) + (g_dn <= 0.0);
      const double after = 0.5 * (detail::cdf_ratio(beta + up.d_beta, g_up) +
                                  detail::cdf_ratio(beta + dn.d_beta, g_dn));
      m.add(after - before);
    }
    partial[ci] = m;
    crossed[ci] = cross;
  });

  Moments total;
  DriftEstimate out;
  for (std::size_t ci = 0; ci < chunks; ++ci) {
    total.merge(partial[ci]);
    out.crossed_nonpositive += crossed[ci];
  }
  out.n = total.n;
  out.empirical_mean = total.mean;
  out.std_error = std::sqrt(total.variance() / static_cast<double>(total.n));
  out.predicted = analytic::drift_prediction(cfg.eta, cfg.c, spec.gamma_dist, spec.beta_dist, quad).value;
  out.agree = std::abs(out.empirical_mean - out.predicted) <= 3.0 * out.std_error;
  out.beta_even = spec.beta_dist.is_even();
  return out;
}

// ---------------------------------------------------------------------------
// Trajectories

struct TrajectoryRecord {
  std::int64_t step = 0;
  double gamma = 0.0;
  double beta = 0.0;
  double activation_prob = 0.0;  ///< Φ((β+α)/|γ|)
  double shift_ratio = 0.0;      ///< C = (β+α)/|γ|
  bool collapsed = false;        ///< |γ| < collapse threshold
};

struct UnitState {
  double gamma = 1.0;
  double beta = 0.0;
};

inline constexpr double kDefaultCollapseThreshold = 1e-3;

inline TrajectoryRecord make_record(std::int64_t step, double gamma, double beta, double alpha,
                                    double collapse_threshold) {
  TrajectoryRecord r;
  r.step = step;
  r.gamma = gamma;
  r.beta = beta;
  r.activation_prob = activation_probability(gamma, beta, alpha);
  const double b = beta + alpha;
  r.shift_ratio = gamma == 0.0 ? (b > 0 ? INFINITY : (b < 0 ? -INFINITY : 0.0)) : b / std::abs(gamma);
  r.collapsed = std::abs(gamma) < collapse_threshold;
  return r;
}

struct TrajectoryResult {
  std::vector<TrajectoryRecord> records;
  bool aborted = false;
  std::string message;

  const TrajectoryRecord& last() const { return records.back(); }
};

/// Simulates `steps` noisy SGD updates plus weight decay from `initial`.
/// Records step 0, every `stride`-th step and the final step. A non-finite
/// state stops the run; the last finite record is kept and `aborted` set.
inline TrajectoryResult sgd_trajectory(UnitState initial, std::int64_t steps, const UpdateConfig& cfg,
                                       std::int64_t stride = 1,
                                       double collapse_threshold = kDefaultCollapseThreshold) {
  cfg.validate();
  if (steps < 1) throw DomainError("sgd_trajectory: steps must be >= 1");
  if (stride < 1) throw DomainError("sgd_trajectory: stride must be >= 1");
  require_finite(initial.gamma, "initial gamma");
  require_finite(initial.beta, "initial beta");

  TrajectoryResult out;
  std::mt19937_64 gen(mix64(cfg.seed));
  std::normal_distribution<double> xhat(0.0, 1.0);
  DistSampler noise(cfg.noise_dist);
  double gamma = initial.gamma, beta = initial.beta;
  out.records.push_back(make_record(0, gamma, beta, cfg.alpha, collapse_threshold));
  for (std::int64_t s = 1; s <= steps; ++s) {
    const double x = xhat(gen);
    const double g = noise(gen);
    const auto d = update_step(gamma, beta, x, g, cfg);
    double ng = gamma + d.d_gamma, nb = beta + d.d_beta;
    apply_weight_decay(ng, nb, cfg);
    if (!std::isfinite(ng) || !std::isfinite(nb)) {
      out.aborted = true;
      out.message = "non-finite state at step " + std::to_string(s);
      if (out.records.back().step != s - 1) {
        out.records.push_back(make_record(s - 1, gamma, beta, cfg.alpha, collapse_threshold));
      }
      return out;
    }
    gamma = ng;
    beta = nb;
    if (s % stride == 0 || s == steps) {
      out.records.push_back(make_record(s, gamma, beta, cfg.alpha, collapse_threshold));
    }
  }
  return out;
}

struct DecayResult {
  std::vector<TrajectoryRecord> records;
  std::optional<std::int64_t> reactivation_step;  ///< first step with C ≥ 0
};

/// Pure weight decay of a dead psBN unit (dead units receive no task
/// gradient). C = (β+α)/|γ| then grows by (ηλ/(1−ηλ))·α/|γ| per step.
/// Stops at reactivation or after `steps` steps.
inline DecayResult decay_trajectory(UnitState initial, const UpdateConfig& cfg, std::int64_t steps,
                                    std::int64_t stride = 1,
                                    double collapse_threshold = kDefaultCollapseThreshold) {
  cfg.validate();
  if (cfg.alpha == 0.0) {
    throw DomainError("decay_trajectory: alpha must be > 0 (with alpha = 0, C never changes under decay)");
  }
  if (cfg.weight_decay == 0.0 || cfg.eta == 0.0) throw DomainError("decay_trajectory: needs eta > 0 and weight_decay > 0");
  if (steps < 1 || stride < 1) throw DomainError("decay_trajectory: steps and stride must be >= 1");
  if (initial.gamma == 0.0) throw SingularityError("decay_trajectory: gamma must be nonzero");
  if (!((initial.beta + cfg.alpha) / std::abs(initial.gamma) < 0.0)) {
    throw DomainError("decay_trajectory: initial unit must be dead ((beta + alpha)/|gamma| < 0)");
  }

  DecayResult out;
  double gamma = initial.gamma, beta = initial.beta;
  out.records.push_back(make_record(0, gamma, beta, cfg.alpha, collapse_threshold));
  for (std::int64_t s = 1; s <= steps; ++s) {
    apply_weight_decay(gamma, beta, cfg);
    auto rec = make_record(s, gamma, beta, cfg.alpha, collapse_threshold);
    const bool reactivated = rec.shift_ratio >= 0.0;
    if (s % stride == 0 || s == steps || reactivated) out.records.push_back(rec);
    if (reactivated) {
      out.reactivation_step = s;
      break;
    }
  }
  return out;
}

/// Closed-form per-step growth of C under pure decay.
inline double shift_ratio_increment(double gamma, const UpdateConfig& cfg) {
  const double el = cfg.eta * cfg.weight_decay;
  return el / (1.0 - el) * cfg.alpha / std::abs(gamma);
}

// ---------------------------------------------------------------------------
// Theorem verification grid

struct VerifyCase {
  std::string run_id;
  double eta = 0.0;
  double c = 1.0;
  NoiseKind noise = NoiseKind::Normal;
  ScalarDist gamma_dist;
  ScalarDist beta_dist;
  std::uint64_t count = 10'000'000;
};

struct VerifyRow {
  VerifyCase config;
  DriftEstimate estimate;
  DriftEstimate doubled;  ///< same seed, learning rate 2η
  double eta_ratio = 0.0;  ///< empirical(2η) / empirical(η); NaN when empirical(η) = 0
};

/// Standard grid: η ∈ {0, 0.002, 0.005, 0.01} × noise {normal, uniform} over
/// three (γ, β) families, c = 1.
inline std::vector<VerifyCase> standard_grid(std::uint64_t count = 10'000'000) {
  const std::vector<std::pair<ScalarDist, ScalarDist>> families = {
      {ScalarDist::uniform(0.5, 1.5), ScalarDist::uniform(-1.0, 1.0)},
      {ScalarDist::point(1.0), ScalarDist::point(0.0)},
      {ScalarDist::uniform(0.5, 1.5), ScalarDist::normal(0.0, 0.5)},
  };
  std::vector<VerifyCase> grid;
  int id = 0;
  for (const auto& [g, b] : families) {
    for (auto noise : {NoiseKind::Normal, NoiseKind::Uniform}) {
      for (double eta : {0.0, 0.002, 0.005, 0.01}) {
        grid.push_back({"r" + std::to_string(id++), eta, 1.0, noise, g, b, count});
      }
    }
  }
  return grid;
}

inline std::vector<VerifyRow> verify_theorem(const std::vector<VerifyCase>& grid, std::uint64_t seed,
                                             const QuadratureSpec& quad = {},
                                             int threads = thread_cap()) {
  std::vector<VerifyRow> rows;
  rows.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& vc = grid[i];
    const std::uint64_t row_seed = chunk_seed(seed, i);
    EnsembleSpec spec{vc.gamma_dist, vc.beta_dist, vc.count};
    VerifyRow row;
    row.config = vc;
    row.estimate = one_step_drift(spec, UpdateConfig::make(vc.eta, vc.c, vc.noise, 0.0, 0.0, row_seed), quad, threads);
    row.doubled = one_step_drift(spec, UpdateConfig::make(2.0 * vc.eta, vc.c, vc.noise, 0.0, 0.0, row_seed), quad, threads);
    row.eta_ratio = row.estimate.empirical_mean != 0.0 ? row.doubled.empirical_mean / row.estimate.empirical_mean
                                                       : std::nan("");
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV emission and readers

inline CsvTable drift_csv(const std::vector<VerifyRow>& rows) {
  CsvTable t;
  t.header = {"run_id", "eta", "c", "noise", "gamma_dist", "beta_dist", "n", "empirical_mean", "std_error",
              "predicted", "agree", "beta_even", "crossed_nonpositive", "empirical_2eta", "eta_ratio"};
  for (const auto& r : rows) {
    const auto& e = r.estimate;
    t.rows.push_back({r.config.run_id, fmt_num(r.config.eta), fmt_num(r.config.c), to_string(r.config.noise),
                      r.config.gamma_dist.to_string(), r.config.beta_dist.to_string(), std::to_string(e.n),
                      fmt_num(e.empirical_mean), fmt_num(e.std_error), fmt_num(e.predicted), e.agree ? "true" : "false",
                      e.beta_even ? "true" : "false", std::to_string(e.crossed_nonpositive),
                      fmt_num(r.doubled.empirical_mean), fmt_num(r.eta_ratio)});
  }
  return t;
}

/// Reads back what drift_csv wrote. The 2η estimate keeps only its mean.
inline std::vector<VerifyRow> drift_rows_from_csv(const CsvTable& t) {
  std::vector<VerifyRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    VerifyRow r;
    r.config.run_id = t.get(i, "run_id");
    r.config.eta = t.get_double(i, "eta");
    r.config.c = t.get_double(i, "c");
    r.config.noise = parse_noise_kind(t.get(i, "noise"));
    r.config.gamma_dist = ScalarDist::parse(t.get(i, "gamma_dist"));
    r.config.beta_dist = ScalarDist::parse(t.get(i, "beta_dist"));
    r.estimate.n = std::stoull(t.get(i, "n"));
    r.config.count = r.estimate.n;
    r.estimate.empirical_mean = t.get_double(i, "empirical_mean");
    r.estimate.std_error = t.get_double(i, "std_error");
    r.estimate.predicted = t.get_double(i, "predicted");
    r.estimate.agree = t.get(i, "agree") == "true";
    r.estimate.beta_even = t.get(i, "beta_even") == "true";
    r.estimate.crossed_nonpositive = std::stoull(t.get(i, "crossed_nonpositive"));
    r.doubled.empirical_mean = t.get_double(i, "empirical_2eta");
    r.eta_ratio = t.get_double(i, "eta_ratio");
    out.push_back(r);
  }
  return out;
}

inline CsvTable trajectory_csv(const std::vector<TrajectoryRecord>& records) {
  CsvTable t;
  t.header = {"step", "gamma", "beta", "activation_prob", "shift_ratio", "collapsed"};
  for (const auto& r : records) {
    t.rows.push_back({std::to_string(r.step), fmt_num(r.gamma), fmt_num(r.beta), fmt_num(r.activation_prob),
                      fmt_num(r.shift_ratio), r.collapsed ? "true" : "false"});
  }
  return t;
}

inline std::vector<TrajectoryRecord> trajectory_from_csv(const CsvTable& t) {
  std::vector<TrajectoryRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    TrajectoryRecord r;
    r.step = std::stoll(t.get(i, "step"));
    r.gamma = t.get_double(i, "gamma");
    r.beta = t.get_double(i, "beta");
    r.activation_prob = t.get_double(i, "activation_prob");
    const auto& c = t.get(i, "shift_ratio");
    r.shift_ratio = c == "inf" ? INFINITY : (c == "-inf" ? -INFINITY : t.get_double(i, "shift_ratio"));
    r.collapsed = t.get(i, "collapsed") == "true";
    out.push_back(r);
  }
  return out;
}

}  // namespace collapse_lab::mc
