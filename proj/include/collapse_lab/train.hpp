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
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "collapse_lab/dataset.hpp"
#include "collapse_lab/errors.hpp"
#include "collapse_lab/model.hpp"
#include "collapse_lab/parallel.hpp"
#include "collapse_lab/sparsity.hpp"
#include "json.hpp"

namespace collapse_lab::net {

enum class LabelMode { True, Random };

struct TrainConfig {
  int rounds = 5;
  int epochs_per_round = 10;
  std::size_t batch_size = 64;
  double eta_max = 0.1;
  double eta_min = 0.0;
  double momentum_sgd = 0.9;
  double weight_decay = 5e-4;
  ActivationKind activation = ActivationKind::ReLU;
  double gamma_init = 1.0;
  LabelMode label_mode = LabelMode::True;
  std::uint64_t seed = 0;

  NormKind norm = NormKind::BN;
  double alpha = 0.1;
  std::size_t hidden_width = 128;
  std::size_t hidden_layers = 3;

  std::size_t classes = 10;
  std::size_t dim = 32;
  std::size_t n_per_class = 500;
  double separation = 3.0;

  double collapse_threshold = sparsity::kDefaultThreshold;

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (rounds < 1) fail("rounds: must be >= 1");
    if (epochs_per_round < 1) fail("epochs_per_round: must be >= 1");
    if (batch_size < 2) fail("batch_size: must be >= 2 (BN needs batch statistics)");
    if (!(eta_min >= 0.0 && eta_min < eta_max) && !(eta_max == 0.0 && eta_min == 0.0)) {
      fail("eta_min: must satisfy 0 <= eta_min < eta_max");
    }
    if (!(momentum_sgd >= 0.0 && momentum_sgd < 1.0)) fail("momentum_sgd: must lie in [0, 1)");
    if (!(weight_decay >= 0.0)) fail("weight_decay: must be >= 0");
    if (!(gamma_init > 0.0)) fail("gamma_init: must be > 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha: must lie in [0, 1]");
    if (hidden_width < 1 || hidden_layers < 1) fail("hidden_width/hidden_layers: must be >= 1");
    if (classes < 2) fail("classes: must be >= 2");
    if (dim < classes) fail("dim: must be >= classes");
    if (n_per_class < 5) fail("n_per_class: must be >= 5");
    if (!(collapse_threshold > 0.0)) fail("collapse_threshold: must be > 0");
    if (batch_size > n_per_class * classes * 4 / 5) fail("batch_size: larger than the training split");
  }

  ModelSpec model_spec() const {
    ModelSpec s;
    s.input_dim = dim;
    s.classes = classes;
    s.hidden.assign(hidden_layers, hidden_width);
    s.norm = norm;
    s.alpha = alpha;
    s.activation = activation;
    s.gamma_init = gamma_init;
    return s;
  }
};

struct RoundReport {
  int round_index = 0;
  double train_loss = 0.0;  ///< mean mini-batch loss over the round's last epoch
  double train_acc = 0.0;   ///< eval-mode accuracy on the training split
  double val_acc = 0.0;
  sparsity::SparsityReport sparsity;

  friend bool operator==(const RoundReport&, const RoundReport&) = default;
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Eval-mode loss and accuracy, in fixed chunks of 500 rows.
inline EvalResult evaluate(Mlp& model, const Tensor& x, const std::vector<int>& y) {
  EvalResult r;
  const std::size_t n = y.size(), chunk = 500;
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t m = std::min(chunk, n - start);
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), start);
    Tensor logits = model.forward(gather_rows(x, idx), Mode::Eval);
    auto res = softmax_cross_entropy(logits, std::span<const int>(y).subspan(start, m));
    correct += res.correct;
    loss_sum += res.loss * static_cast<double>(m);
  }
  r.loss = loss_sum / static_cast<double>(n);
  r.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return r;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) { return chunk_seed(seed, stream); }

/// Owns the model, optimizer and shuffling RNG of one training run. Each
/// round resets momentum and restarts the cosine schedule at eta_max, using
/// the previous round's weights as initialization.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg) : cfg_(std::move(cfg)), sgd_(cfg_.momentum_sgd, cfg_.weight_decay) {
    cfg_.validate();
    data_ = make_synthetic_dataset(cfg_.classes, cfg_.dim, cfg_.n_per_class, derive_seed(cfg_.seed, 1), cfg_.separation);
    if (cfg_.label_mode == LabelMode::Random) data_ = shuffle_labels(std::move(data_), derive_seed(cfg_.seed, 2));
    std::mt19937_64 init_gen(derive_seed(cfg_.seed, 3));
    model_ = Mlp(cfg_.model_spec(), init_gen);
    rng_.seed(derive_seed(cfg_.seed, 4));
  }

  const TrainConfig& config() const { return cfg_; }
  Mlp& model() { return model_; }
  const Dataset& data() const { return data_; }
  int rounds_done() const { return rounds_done_; }

  std::size_t steps_per_epoch() const { return data_.train_y.size() / cfg_.batch_size; }

  RoundReport train_round() {
    const std::size_t n = data_.train_y.size();
    const std::size_t per_epoch = steps_per_epoch();
    const std::size_t total = per_epoch * static_cast<std::size_t>(cfg_.epochs_per_round);
    sgd_.reset();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<int> labels(cfg_.batch_size);
    double epoch_loss = 0.0;
    std::size_t t = 0;
    for (int epoch = 0; epoch < cfg_.epochs_per_round; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng_);
      epoch_loss = 0.0;
      for (std::size_t s = 0; s < per_epoch; ++s, ++t) {
        std::span<const std::size_t> idx(order.data() + s * cfg_.batch_size, cfg_.batch_size);
        for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = data_.train_y[idx[i]];
        model_.zero_grad();
        Tensor logits = model_.forward(gather_rows(data_.train_x, idx), Mode::Train);
        auto res = softmax_cross_entropy(logits, labels);
        if (!std::isfinite(res.loss)) {
          throw DivergenceError("training diverged: non-finite loss in round " + std::to_string(rounds_done_ + 1) +
                                ", epoch " + std::to_string(epoch + 1) + ", step " + std::to_string(s));
        }
        epoch_loss += res.loss;
        model_.backward(res.grad);
        sgd_.step(model_.params(), cosine_lr(cfg_.eta_max, cfg_.eta_min, t, total));
      }
    }
    ++rounds_done_;
    RoundReport r;
    r.round_index = rounds_done_;
    r.train_loss = epoch_loss / static_cast<double>(per_epoch);
    r.train_acc = evaluate(model_, data_.train_x, data_.train_y).accuracy;
    r.val_acc = evaluate(model_, data_.val_x, data_.val_y).accuracy;
    r.sparsity = sparsity::model_sparsity(model_, cfg_.collapse_threshold);
    return r;
  }

  nlohmann::json checkpoint() const;
  static Trainer restore(const nlohmann::json& j);

 private:
  TrainConfig cfg_;
  Dataset data_;
  Mlp model_;
  Sgd sgd_;
  std::mt19937_64 rng_;
  int rounds_done_ = 0;
};

inline RoundReport train_round(Trainer& trainer) { return trainer.train_round(); }

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json config_to_json(const TrainConfig& c) {
  return {{"rounds", c.rounds},
          {"epochs_per_round", c.epochs_per_round},
          {"batch_size", c.batch_size},
          {"eta_max", c.eta_max},
          {"eta_min", c.eta_min},
          {"momentum_sgd", c.momentum_sgd},
          {"weight_decay", c.weight_decay},
          {"activation", to_string(c.activation)},
          {"gamma_init", c.gamma_init},
          {"label_mode", c.label_mode == LabelMode::True ? "true" : "random"},
          {"seed", c.seed},
          {"norm", to_string(c.norm)},
          {"alpha", c.alpha},
          {"hidden_width", c.hidden_width},
          {"hidden_layers", c.hidden_layers},
          {"classes", c.classes},
          {"dim", c.dim},
          {"n_per_class", c.n_per_class},
          {"separation", c.separation},
          {"collapse_threshold", c.collapse_threshold}};
}

inline ActivationKind parse_activation(const std::string& s) {
  if (s == "relu") return ActivationKind::ReLU;
  if (s == "leaky_relu" || s == "leaky") return ActivationKind::LeakyReLU;
  throw ConfigError("activation: expected relu or leaky_relu, got '" + s + "'");
}

inline NormKind parse_norm(const std::string& s) {
  if (s == "bn") return NormKind::BN;
  if (s == "psbn") return NormKind::PsBN;
  if (s == "none") return NormKind::None;
  throw ConfigError("norm: expected bn, psbn or none, got '" + s + "'");
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.rounds = j.at("rounds").get<int>();
  c.epochs_per_round = j.at("epochs_per_round").get<int>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.eta_max = j.at("eta_max").get<double>();
  c.eta_min = j.at("eta_min").get<double>();
  c.momentum_sgd = j.at("momentum_sgd").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.activation = parse_activation(j.at("activation").get<std::string>());
  c.gamma_init = j.at("gamma_init").get<double>();
  c.label_mode = j.at("label_mode").get<std::string>() == "random" ? LabelMode::Random : LabelMode::True;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.norm = parse_norm(j.at("norm").get<std::string>());
  c.alpha = j.at("alpha").get<double>();
  c.hidden_width = j.at("hidden_width").get<std::size_t>();
  c.hidden_layers = j.at("hidden_layers").get<std::size_t>();
  c.classes = j.at("classes").get<std::size_t>();
  c.dim = j.at("dim").get<std::size_t>();
  c.n_per_class = j.at("n_per_class").get<std::size_t>();
  c.separation = j.at("separation").get<double>();
  c.collapse_threshold = j.at("collapse_threshold").get<double>();
  return c;
}

/// Round-boundary checkpoint: config, every parameter (shape + flat data),
/// BN running statistics and the shuffling RNG state. Momentum buffers are
/// reset at each round start and are not stored.
inline nlohmann::json Trainer::checkpoint() const {
  nlohmann::json params = nlohmann::json::array();
  auto& self = const_cast<Trainer&>(*this);
  for (const auto& p : self.model_.params()) {
    params.push_back({{"name", p.name}, {"shape", {p.value.size()}}, {"data", std::vector<double>(p.value.begin(), p.value.end())}});
  }
  nlohmann::json bn = nlohmann::json::array();
  for (const auto& n : model_.norms()) {
    bn.push_back({{"running_mean", n.state.running_mean}, {"running_var", n.state.running_var},
                  {"eps", n.state.eps}, {"momentum", n.state.momentum}, {"alpha", n.state.alpha}});
  }
  std::ostringstream rng;
  rng << rng_;
  return {{"format", "collapse-lab-checkpoint"},
          {"version", kCheckpointVersion},
          {"config", config_to_json(cfg_)},
          {"rounds_done", rounds_done_},
          {"rng", rng.str()},
          {"params", params},
          {"bn", bn}};
}

inline Trainer Trainer::restore(const nlohmann::json& j) {
  if (j.value("format", "") != "collapse-lab-checkpoint") throw StructuralError("checkpoint: unknown format");
  if (j.at("version").get<int>() != kCheckpointVersion) throw StructuralError("checkpoint: unsupported version");
  Trainer t(config_from_json(j.at("config")));
  t.rounds_done_ = j.at("rounds_done").get<int>();
  std::istringstream rng(j.at("rng").get<std::string>());
  rng >> t.rng_;
  auto params = t.model_.params();
  const auto& saved = j.at("params");
  if (saved.size() != params.size()) throw StructuralError("checkpoint: parameter count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto data = saved[k].at("data").get<std::vector<double>>();
    if (saved[k].at("name").get<std::string>() != params[k].name || data.size() != params[k].value.size()) {
      throw StructuralError("checkpoint: parameter '" + params[k].name + "' does not match");
    }
    std::copy(data.begin(), data.end(), params[k].value.begin());
  }
  const auto& bn = j.at("bn");
  if (bn.size() != t.model_.norms().size()) throw StructuralError("checkpoint: BN layer count mismatch");
  for (std::size_t l = 0; l < bn.size(); ++l) {
    auto& st = t.model_.norms()[l].state;
    st.running_mean = bn[l].at("running_mean").get<std::vector<double>>();
    st.running_var = bn[l].at("running_var").get<std::vector<double>>();
    st.eps = bn[l].at("eps").get<double>();
    st.momentum = bn[l].at("momentum").get<double>();
    st.alpha = bn[l].at("alpha").get<double>();
    st.validate();
  }
  return t;
}

// ---------------------------------------------------------------------------
// Multi-round experiments

struct Arm {
  std::string name;
  TrainConfig cfg;
};

struct ExperimentRow {
  std::string arm;
  std::uint64_t seed = 0;
  RoundReport report;
};

struct ArmFailure {
  std::string arm;
  std::uint64_t seed = 0;
  std::string message;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::vector<ArmFailure> failures;
  std::vector<std::pair<std::string, nlohmann::json>> checkpoints;  ///< (arm/seed tag, final checkpoint)

  /// Final-round report of (arm, seed), if that run completed.
  std::optional<RoundReport> final_report(const std::string& arm, std::uint64_t seed) const {
    std::optional<RoundReport> out;
    for (const auto& r : rows) {
      if (r.arm == arm && r.seed == seed) out = r.report;
    }
    return out;
  }
};

/// Runs every (arm, seed) pair; independent runs may execute on separate
/// threads. A failed run is recorded and the experiment continues.
inline ExperimentResult multi_round_experiment(const std::vector<Arm>& arms, const std::vector<std::uint64_t>& seeds,
                                               int threads = thread_cap(), bool keep_checkpoints = false) {
  struct Job {
    std::size_t arm;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t a = 0; a < arms.size(); ++a) {
    for (auto s : seeds) jobs.push_back({a, s});
  }
  std::vector<std::vector<RoundReport>> reports(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::vector<nlohmann::json> finals(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    TrainConfig cfg = arms[jobs[i].arm].cfg;
    cfg.seed = jobs[i].seed;
    try {
      Trainer trainer(cfg);
      for (int r = 0; r < cfg.rounds; ++r) reports[i].push_back(trainer.train_round());
      if (keep_checkpoints) finals[i] = trainer.checkpoint();
    } catch (const RuntimeError& e) {
      errors[i] = e.what();
    }
  });
  ExperimentResult out;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& name = arms[jobs[i].arm].name;
    for (const auto& r : reports[i]) out.rows.push_back({name, jobs[i].seed, r});
    if (!errors[i].empty()) out.failures.push_back({name, jobs[i].seed, errors[i]});
    if (keep_checkpoints && errors[i].empty()) {
      out.checkpoints.emplace_back(name + "_seed" + std::to_string(jobs[i].seed), finals[i]);
    }
  }
  return out;
}

struct ArmRoundSummary {
  std::string arm;
  int round = 0;
  std::size_t runs = 0;
  double sparsity_mean = 0.0;
  double sparsity_std = 0.0;
  double val_acc_mean = 0.0;
  double val_acc_std = 0.0;
};

/// Per-arm, per-round mean and sample standard deviation across seeds.
inline std::vector<ArmRoundSummary> summarize(const ExperimentResult& result, const std::vector<Arm>& arms) {
  std::vector<ArmRoundSummary> out;
  for (const auto& arm : arms) {
    for (int round = 1; round <= arm.cfg.rounds; ++round) {
      std::vector<double> sp, acc;
      for (const auto& r : result.rows) {
        if (r.arm == arm.name && r.report.round_index == round) {
          sp.push_back(r.report.sparsity.sparsity_ratio);
          acc.push_back(r.report.val_acc);
        }
      }
      if (sp.empty()) continue;
      auto stats = [](const std::vector<double>& v) {
        double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::pair{m, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
      };
      auto [sm, ssd] = stats(sp);
      auto [am, asd] = stats(acc);
      out.push_back({arm.name, round, sp.size(), sm, ssd, am, asd});
    }
  }
  return out;
}

inline CsvTable experiment_csv(const ExperimentResult& result) {
  CsvTable t;
  t.header = {"arm", "seed", "round", "train_loss", "train_acc", "val_acc", "sparsity_ratio", "flops_reduction"};
  for (const auto& r : result.rows) {
    t.rows.push_back({r.arm, std::to_string(r.seed), std::to_string(r.report.round_index), fmt_num(r.report.train_loss),
                      fmt_num(r.report.train_acc), fmt_num(r.report.val_acc), fmt_num(r.report.sparsity.sparsity_ratio),
                      fmt_num(r.report.sparsity.flops_reduction)});
  }
  return t;
}

inline std::vector<ExperimentRow> experiment_rows_from_csv(const CsvTable& t) {
  std::vector<ExperimentRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    ExperimentRow r;
    r.arm = t.get(i, "arm");
    r.seed = std::stoull(t.get(i, "seed"));
    r.report.round_index = std::stoi(t.get(i, "round"));
    r.report.train_loss = t.get_double(i, "train_loss");
    r.report.train_acc = t.get_double(i, "train_acc");
    r.report.val_acc = t.get_double(i, "val_acc");
    r.report.sparsity.sparsity_ratio = t.get_double(i, "sparsity_ratio");
    r.report.sparsity.flops_reduction = t.get_double(i, "flops_reduction");
    out.push_back(r);
  }
  return out;
}

}  // namespace collapse_lab::net
