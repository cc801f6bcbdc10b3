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

// collapse-lab command-line front end.
//
//   collapse-lab analytic [--k-grid a:b:h] [--j] [--drift] ...
//   collapse-lab mc       [--verify --grid standard] [--trajectory] ...
//   collapse-lab decay    --gamma 1 --beta -1.1 --alpha 0.1 --wd 0.01 --lr 0.1
//   collapse-lab train    --preset paper-fig3-toy --seeds 3
//   collapse-lab report   --input experiment.csv
//
// Exit codes: 0 success, 2 configuration error, 3 runtime/divergence error.

#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "collapse_lab/collapse_lab.hpp"

namespace fs = std::filesystem;
using namespace collapse_lab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

const char* kDistHelp =
    "distribution grammar: uniform:lo:hi | normal:mean:sd | point:value (e.g. uniform:-1:1, normal:0:0.5, point:0)";

/// Values given on the command line, keyed by settings name.
using FlagMap = std::map<std::string, std::string>;

void add_value(CLI::App* app, FlagMap& flags, const std::string& name, const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(name, [&flags, key](const std::string& v) { flags[key] = v; }, help);
}

void add_switch(CLI::App* app, FlagMap& flags, const std::string& name, const std::string& key, const std::string& help) {
  app->add_flag_function(name, [&flags, key](std::int64_t) { flags[key] = "true"; }, help);
}

const std::set<std::string> kCommonKeys = {"seed", "format", "out"};

std::set<std::string> with_common(std::set<std::string> keys) {
  keys.insert(kCommonKeys.begin(), kCommonKeys.end());
  return keys;
}

struct Context {
  config::Settings settings;
  fs::path out_dir;
  std::string format;
  std::uint64_t seed;
};

/// preset < config file section < flags.
Context resolve(const std::string& command, const std::set<std::string>& keys, const FlagMap& preset,
                const std::string& config_path, const FlagMap& flags) {
  Context ctx;
  ctx.settings = config::Settings(with_common(keys));
  ctx.settings.overlay(preset, "preset");
  if (!config_path.empty()) {
    auto sections = config::parse_sections(read_file(config_path));
    for (const auto& [name, values] : sections) {
      if (name != "" && name != command) {
        if (name != "analytic" && name != "mc" && name != "decay" && name != "train" && name != "report") {
          throw ConfigError("config: unknown section [" + name + "]");
        }
        continue;
      }
      ctx.settings.overlay(values, "config [" + (name.empty() ? std::string("top") : name) + "]");
    }
  }
  ctx.settings.overlay(flags, "flag");
  ctx.out_dir = ctx.settings.str("out", ".");
  ctx.format = ctx.settings.str("format", "csv");
  if (ctx.format != "csv" && ctx.format != "json") throw ConfigError("format: expected csv or json");
  const auto seed = ctx.settings.integer("seed", 0);
  if (seed < 0) throw ConfigError("seed: must be >= 0");
  ctx.seed = static_cast<std::uint64_t>(seed);
  fs::create_directories(ctx.out_dir);
  return ctx;
}

nlohmann::json table_to_json(const CsvTable& t) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t i = 0; i < t.header.size(); ++i) obj[t.header[i]] = row[i];
    arr.push_back(obj);
  }
  return arr;
}

/// Writes `stem`.csv or `stem`.json depending on the format setting.
void write_table(const Context& ctx, const std::string& stem, const CsvTable& t) {
  if (ctx.format == "json") {
    write_file((ctx.out_dir / (stem + ".json")).string(), table_to_json(t).dump(2) + "\n");
  } else {
    write_file((ctx.out_dir / (stem + ".csv")).string(), t.to_string());
  }
}

void write_text(const Context& ctx, const std::string& name, const std::string& text) {
  write_file((ctx.out_dir / name).string(), text);
}

QuadratureSpec quad_from(const config::Settings& s) {
  QuadratureSpec q;
  q.truncation_radius = s.real("radius", q.truncation_radius);
  q.panels = static_cast<int>(s.integer("panels", q.panels));
  try {
    q.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("panels/radius: ") + e.what());
  }
  return q;
}

// ---------------------------------------------------------------------------

int cmd_analytic(const Context& ctx) {
  const auto& s = ctx.settings;
  const auto quad = quad_from(s);
  const bool any = s.has("k_grid") || s.flag("j") || s.flag("drift");
  const bool do_k = s.has("k_grid") || !any;
  const bool do_j = s.flag("j") || !any;
  const bool do_drift = s.flag("drift") || !any;

  if (do_k) {
    auto xs = config::parse_grid(s.str("k_grid", "-8:8:0.01"), "k_grid");
    CsvTable t;
    t.header = {"x", "k"};
    std::vector<double> ks;
    for (double x : xs) {
      ks.push_back(analytic::k_fn(x));
      t.rows.push_back({fmt_num(x), fmt_num(ks.back())});
    }
    write_table(ctx, "k_grid", t);
    write_text(ctx, "k_function.svg", plots::k_function(xs, ks));
    CsvTable pos;
    pos.header = {"lo", "hi"};
    for (const auto& iv : analytic::k_positive_intervals()) pos.rows.push_back({fmt_num(iv.lo), fmt_num(iv.hi)});
    write_table(ctx, "k_positive", pos);
    std::cout << "k_grid: " << xs.size() << " rows\n";
  }

  if (do_j) {
    auto gammas = config::parse_grid(s.str("gamma_grid", "0.1:5:0.1"), "gamma_grid");
    std::vector<ScalarDist> betas;
    if (s.has("beta")) {
      betas.push_back(s.dist("beta", {}));
    } else {
      betas = {ScalarDist::point(0.0)};
      for (double a : {0.5, 1.0, 2.0}) betas.push_back(ScalarDist::uniform(-a, a));
      for (double sd : {0.1, 0.5, 1.0}) betas.push_back(ScalarDist::normal(0.0, sd));
    }
    CsvTable t;
    t.header = {"gamma", "beta_dist", "j", "beta_even"};
    for (const auto& b : betas) {
      for (double g : gammas) {
        if (g == 0.0) throw ConfigError("gamma_grid: gamma = 0 is singular");
        t.rows.push_back({fmt_num(g), b.to_string(), fmt_num(analytic::j_fn(g, b, quad)), b.is_even() ? "true" : "false"});
      }
    }
    write_table(ctx, "j_grid", t);
    std::cout << "j_grid: " << t.rows.size() << " rows\n";
  }

  if (do_drift) {
    const double eta = s.real("eta", 0.01), c = s.real("c", 1.0);
    if (eta < 0.0) throw ConfigError("eta: must be >= 0");
    if (c < 0.0) throw ConfigError("c: must be >= 0");
    const auto gamma = s.dist("gamma", ScalarDist::uniform(0.5, 1.5));
    const auto beta = s.dist("beta", ScalarDist::uniform(-1.0, 1.0));
    analytic::DriftPrediction p;
    try {
      p = analytic::drift_prediction(eta, c, gamma, beta, quad);
    } catch (const SingularityError& e) {
      throw ConfigError(std::string("gamma: ") + e.what());
    }
    CsvTable t;
    t.header = {"eta", "c", "gamma_dist", "beta_dist", "predicted", "beta_even"};
    t.rows.push_back({fmt_num(eta), fmt_num(c), gamma.to_string(), beta.to_string(), fmt_num(p.value),
                      p.beta_even ? "true" : "false"});
    write_table(ctx, "drift", t);
    std::cout << "predicted drift: " << fmt_num(p.value) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

mc::UpdateConfig update_config_from(const config::Settings& s, std::uint64_t seed, double eta_default) {
  try {
    return mc::UpdateConfig::make(s.real("eta", eta_default), s.real("c", 1.0), mc::parse_noise_kind(s.str("noise", "normal")),
                                  s.real("wd", 0.0), s.real("alpha", 0.0), seed);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

int cmd_mc(const Context& ctx) {
  const auto& s = ctx.settings;
  const auto quad = quad_from(s);
  const long long n = s.integer("n", 10'000'000);
  if (n < 10000) throw ConfigError("n: must be >= 1e4");

  if (s.flag("trajectory")) {
    auto cfg = update_config_from(s, ctx.seed, 0.1);
    const long long steps = s.integer("steps", 10000), stride = s.integer("stride", 10);
    if (steps < 1 || stride < 1) throw ConfigError("steps/stride: must be >= 1");
    auto res = mc::sgd_trajectory({s.real("gamma0", 1.0), s.real("beta0", 0.0)}, steps, cfg, stride,
                                  s.real("threshold", mc::kDefaultCollapseThreshold));
    write_table(ctx, "trajectory", mc::trajectory_csv(res.records));
    write_text(ctx, "trajectory.svg", plots::trajectory_trace(res.records));
    const auto& last = res.last();
    std::cout << "final gamma " << fmt_num(last.gamma) << " beta " << fmt_num(last.beta) << " activation "
              << fmt_num(last.activation_prob) << (last.collapsed ? " (collapsed)" : "") << "\n";
    if (res.aborted) {
      std::cerr << "trajectory aborted: " << res.message << "\n";
      return kExitRuntime;
    }
    return 0;
  }

  std::vector<mc::VerifyCase> grid;
  if (s.flag("verify")) {
    const auto name = s.str("grid", "standard");
    if (name == "standard") {
      grid = mc::standard_grid(static_cast<std::uint64_t>(n));
    } else if (name == "quick") {
      grid = mc::standard_grid(static_cast<std::uint64_t>(n));
      std::erase_if(grid, [](const mc::VerifyCase& c) { return c.noise == mc::NoiseKind::Uniform; });
    } else {
      throw ConfigError("grid: expected standard or quick, got '" + name + "'");
    }
  } else {
    auto cfg = update_config_from(s, ctx.seed, 0.01);
    mc::VerifyCase vc;
    vc.run_id = "r0";
    vc.eta = cfg.eta;
    vc.c = cfg.c;
    vc.noise = mc::parse_noise_kind(s.str("noise", "normal"));
    vc.gamma_dist = s.dist("gamma", ScalarDist::uniform(0.5, 1.5));
    vc.beta_dist = s.dist("beta", ScalarDist::uniform(-1.0, 1.0));
    vc.count = static_cast<std::uint64_t>(n);
    try {
      analytic::require_gamma_support(vc.gamma_dist);
    } catch (const SingularityError& e) {
      throw ConfigError(std::string("gamma: ") + e.what());
    }
    grid.push_back(vc);
  }
  auto rows = mc::verify_theorem(grid, ctx.seed, quad);
  write_table(ctx, s.flag("verify") ? "verify" : "mc_drift", mc::drift_csv(rows));
  write_text(ctx, "drift_vs_eta.svg", plots::drift_vs_eta(rows));
  std::size_t agree = 0;
  for (const auto& r : rows) {
    agree += r.estimate.agree;
    std::cout << r.config.run_id << " eta=" << fmt_num(r.config.eta) << " " << mc::to_string(r.config.noise) << " "
              << r.config.gamma_dist.to_string() << " " << r.config.beta_dist.to_string()
              << " empirical=" << fmt_num(r.estimate.empirical_mean) << " se=" << fmt_num(r.estimate.std_error)
              << " predicted=" << fmt_num(r.estimate.predicted) << " agree=" << (r.estimate.agree ? "true" : "false")
              << "\n";
  }
  std::cout << agree << "/" << rows.size() << " rows agree within 3 standard errors\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_decay(const Context& ctx) {
  const auto& s = ctx.settings;
  mc::UpdateConfig cfg;
  try {
    cfg = mc::UpdateConfig::make(s.real("lr", 0.1), 0.0, mc::NoiseKind::Normal, s.real("wd", 0.01), s.real("alpha", 0.1), ctx.seed);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  const long long steps = s.integer("steps", 100000), stride = s.integer("stride", 1);
  mc::UnitState init{s.real("gamma", 1.0), s.real("beta", -1.1)};
  mc::DecayResult res;
  try {
    res = mc::decay_trajectory(init, cfg, steps, stride, s.real("threshold", mc::kDefaultCollapseThreshold));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  write_table(ctx, "decay", mc::trajectory_csv(res.records));
  write_text(ctx, "decay.svg", plots::shift_ratio_vs_step(res.records));

  const double first = res.records.size() > 1 ? res.records[1].shift_ratio - res.records[0].shift_ratio : 0.0;
  CsvTable summary;
  summary.header = {"c0", "first_increment", "closed_form_increment", "reactivation_step"};
  summary.rows.push_back({fmt_num(res.records[0].shift_ratio), fmt_num(first),
                          fmt_num(mc::shift_ratio_increment(init.gamma, cfg)),
                          res.reactivation_step ? std::to_string(*res.reactivation_step) : "none"});
  write_table(ctx, "decay_summary", summary);
  std::cout << "C0 = " << fmt_num(res.records[0].shift_ratio) << "\nfirst C increment = " << fmt_num(first)
            << " (closed form " << fmt_num(mc::shift_ratio_increment(init.gamma, cfg)) << ")\nreactivation step = "
            << (res.reactivation_step ? std::to_string(*res.reactivation_step) : "not reached") << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

const std::set<std::string> kTrainKeys = {"preset", "seeds", "random_labels", "rounds", "epochs", "batch", "eta_max",
                                          "eta_min", "momentum", "wd", "gamma_init", "activation", "norm", "alpha",
                                          "width", "depth", "classes", "dim", "n_per_class", "separation",
                                          "threshold", "checkpoints"};

/// Shared base of every preset: 5 rounds of 10 epochs on 10 Gaussian classes
/// in 32 dimensions, 3×128 MLP, batch 64, weight decay 5e-3.
FlagMap preset_base() {
  return {{"rounds", "5"},  {"epochs", "10"},  {"batch", "64"},  {"eta_max", "0.1"}, {"eta_min", "0"},
          {"wd", "5e-3"},   {"width", "128"},  {"depth", "3"},   {"classes", "10"},  {"dim", "32"},
          {"n_per_class", "500"}};
}

struct ArmDelta {
  std::string name;
  FlagMap delta;
};

std::vector<ArmDelta> preset_arms(const std::string& preset) {
  if (preset == "paper-fig3-toy") {
    return {{"bn_relu", {{"norm", "bn"}, {"activation", "relu"}}},
            {"bn_leaky_relu", {{"norm", "bn"}, {"activation", "leaky_relu"}}},
            {"psbn_relu", {{"norm", "psbn"}, {"activation", "relu"}, {"alpha", "0.1"}}},
            {"no_norm_relu", {{"norm", "none"}, {"activation", "relu"}}}};
  }
  if (preset == "fig5a-lr") {
    return {{"lr0.1", {{"eta_max", "0.1"}}}, {"lr0.2", {{"eta_max", "0.2"}}}, {"lr0.5", {{"eta_max", "0.5"}}}};
  }
  if (preset == "fig5b-gamma") {
    return {{"gamma0.2", {{"gamma_init", "0.2"}}}, {"gamma0.5", {{"gamma_init", "0.5"}}}, {"gamma1.0", {{"gamma_init", "1.0"}}}};
  }
  if (preset == "fig2-random-labels") {
    return {{"true_labels", {}}, {"random_labels", {{"random_labels", "true"}}}};
  }
  if (preset == "single") return {{"single", {}}};
  throw ConfigError("preset: expected paper-fig3-toy, fig5a-lr, fig5b-gamma, fig2-random-labels or single, got '" + preset + "'");
}

net::TrainConfig train_config_from(const config::Settings& s) {
  net::TrainConfig c;
  c.rounds = static_cast<int>(s.integer("rounds", c.rounds));
  c.epochs_per_round = static_cast<int>(s.integer("epochs", c.epochs_per_round));
  c.batch_size = static_cast<std::size_t>(std::max(0LL, s.integer("batch", static_cast<long long>(c.batch_size))));
  c.eta_max = s.real("eta_max", c.eta_max);
  c.eta_min = s.real("eta_min", c.eta_min);
  c.momentum_sgd = s.real("momentum", c.momentum_sgd);
  c.weight_decay = s.real("wd", c.weight_decay);
  c.gamma_init = s.real("gamma_init", c.gamma_init);
  c.activation = net::parse_activation(s.str("activation", "relu"));
  c.norm = net::parse_norm(s.str("norm", "bn"));
  c.alpha = s.real("alpha", c.alpha);
  c.hidden_width = static_cast<std::size_t>(std::max(0LL, s.integer("width", static_cast<long long>(c.hidden_width))));
  c.hidden_layers = static_cast<std::size_t>(std::max(0LL, s.integer("depth", static_cast<long long>(c.hidden_layers))));
  c.classes = static_cast<std::size_t>(std::max(0LL, s.integer("classes", static_cast<long long>(c.classes))));
  c.dim = static_cast<std::size_t>(std::max(0LL, s.integer("dim", static_cast<long long>(c.dim))));
  c.n_per_class = static_cast<std::size_t>(std::max(0LL, s.integer("n_per_class", static_cast<long long>(c.n_per_class))));
  c.separation = s.real("separation", c.separation);
  c.collapse_threshold = s.real("threshold", c.collapse_threshold);
  c.label_mode = s.flag("random_labels") ? net::LabelMode::Random : net::LabelMode::True;
  c.validate();
  return c;
}

int cmd_train(const Context& ctx, const FlagMap& preset_values, const std::string& config_path, const FlagMap& flags) {
  const auto& s = ctx.settings;
  const auto preset = s.str("preset", "single");
  const long long nseeds = s.integer("seeds", 3);
  if (nseeds < 1) throw ConfigError("seeds: must be >= 1");

  std::vector<net::Arm> arms;
  for (const auto& arm : preset_arms(preset)) {
    // Arm-defining fields sit between the preset base and user settings,
    // except that the arm's own dimension always keeps the arm's value.
    FlagMap merged = preset_values;
    for (const auto& [k, v] : arm.delta) merged[k] = v;
    Context arm_ctx = resolve("train", kTrainKeys, merged, config_path, flags);
    for (const auto& [k, v] : arm.delta) arm_ctx.settings.set(k, v);
    net::TrainConfig cfg = train_config_from(arm_ctx.settings);
    arms.push_back({arm.name, cfg});
  }
  std::vector<std::uint64_t> seeds;
  for (long long i = 0; i < nseeds; ++i) seeds.push_back(ctx.seed + static_cast<std::uint64_t>(i));

  const bool keep_ckpt = s.flag("checkpoints");
  auto result = net::multi_round_experiment(arms, seeds, thread_cap(), true);

  write_table(ctx, "experiment", net::experiment_csv(result));
  CsvTable summary;
  summary.header = {"arm", "round", "runs", "sparsity_mean", "sparsity_std", "val_acc_mean", "val_acc_std"};
  for (const auto& r : net::summarize(result, arms)) {
    summary.rows.push_back({r.arm, std::to_string(r.round), std::to_string(r.runs), fmt_num(r.sparsity_mean),
                            fmt_num(r.sparsity_std), fmt_num(r.val_acc_mean), fmt_num(r.val_acc_std)});
  }
  write_table(ctx, "summary", summary);
  write_text(ctx, "sparsity.svg", plots::experiment_metric(result.rows, true));
  write_text(ctx, "accuracy.svg", plots::experiment_metric(result.rows, false));

  fs::create_directories(ctx.out_dir / "sparsity");
  fs::create_directories(ctx.out_dir / "histograms");
  if (keep_ckpt) fs::create_directories(ctx.out_dir / "checkpoints");
  for (const auto& [tag, ckpt] : result.checkpoints) {
    auto trainer = net::Trainer::restore(ckpt);
    const auto report = sparsity::model_sparsity(trainer.model(), trainer.config().collapse_threshold);
    if (ctx.format == "json") {
      write_file((ctx.out_dir / "sparsity" / (tag + ".json")).string(), sparsity::to_json(report).dump(2) + "\n");
    } else {
      write_file((ctx.out_dir / "sparsity" / (tag + ".csv")).string(), sparsity::to_csv(report).to_string());
    }
    write_file((ctx.out_dir / "histograms" / (tag + ".csv")).string(),
               sparsity::histogram_csv(sparsity::model_l1_histogram(trainer.model())).to_string());
    if (keep_ckpt) write_file((ctx.out_dir / "checkpoints" / (tag + ".json")).string(), ckpt.dump() + "\n");
  }

  for (const auto& arm : arms) {
    for (auto seed : seeds) {
      if (auto r = result.final_report(arm.name, seed)) {
        std::cout << arm.name << " seed " << seed << ": round " << r->round_index << " val_acc " << fmt_num(r->val_acc)
                  << " train_acc " << fmt_num(r->train_acc) << " sparsity " << fmt_num(r->sparsity.sparsity_ratio) << "\n";
      }
    }
  }
  for (const auto& f : result.failures) std::cerr << "arm " << f.arm << " seed " << f.seed << " failed: " << f.message << "\n";
  if (result.failures.size() == arms.size() * seeds.size()) return kExitRuntime;
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_report(const Context& ctx) {
  const auto input = ctx.settings.str("input");
  if (input.empty()) throw ConfigError("input: required");
  const auto table = CsvTable::parse(read_file(input));
  auto has = [&](const std::string& col) {
    return std::find(table.header.begin(), table.header.end(), col) != table.header.end();
  };
  if (has("arm") && has("sparsity_ratio")) {
    auto rows = net::experiment_rows_from_csv(table);
    write_text(ctx, "sparsity.svg", plots::experiment_metric(rows, true));
    write_text(ctx, "accuracy.svg", plots::experiment_metric(rows, false));
  } else if (has("empirical_mean")) {
    write_text(ctx, "drift_vs_eta.svg", plots::drift_vs_eta(mc::drift_rows_from_csv(table)));
  } else if (has("shift_ratio")) {
    auto records = mc::trajectory_from_csv(table);
    write_text(ctx, "decay.svg", plots::shift_ratio_vs_step(records));
    write_text(ctx, "trajectory.svg", plots::trajectory_trace(records));
  } else if (has("x") && has("k")) {
    std::vector<double> xs, ks;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      xs.push_back(table.get_double(i, "x"));
      ks.push_back(table.get_double(i, "k"));
    }
    write_text(ctx, "k_function.svg", plots::k_function(xs, ks));
  } else {
    throw ConfigError("input: unrecognized CSV layout in '" + input + "'");
  }
  std::cout << "re-plotted " << input << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collapse-lab: BN+ReLU filter-collapse laboratory (analytic drift, Monte Carlo, toy training)"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  FlagMap common;
  app.add_option("--config", config_path, "sectioned key=value config file ([analytic], [mc], [decay], [train], [report])");
  add_value(&app, common, "--out", "out", "output directory (default .)");
  add_value(&app, common, "--seed", "seed", "base random seed (default 0)");
  add_value(&app, common, "--format", "format", "table format: csv or json (default csv)");
  app.footer(std::string(kDistHelp) + "\nCOLLAPSE_LAB_THREADS caps worker threads. Exit codes: 0 ok, 2 config error, 3 runtime error.");

  FlagMap fa, fm, fd, ft, fr;
  auto* analytic = app.add_subcommand("analytic", "K(x), J(gamma) and drift-prediction tables");
  add_value(analytic, fa, "--k-grid", "k_grid", "grid start:stop:step for K(x) (default -8:8:0.01)");
  add_switch(analytic, fa, "--j", "j", "tabulate J(gamma)");
  add_value(analytic, fa, "--gamma-grid", "gamma_grid", "gamma grid for --j (default 0.1:5:0.1)");
  add_value(analytic, fa, "--beta", "beta", "beta distribution");
  add_switch(analytic, fa, "--drift", "drift", "predicted one-step drift");
  add_value(analytic, fa, "--eta", "eta", "learning rate");
  add_value(analytic, fa, "--c", "c", "gradient noise standard deviation");
  add_value(analytic, fa, "--gamma", "gamma", "gamma distribution (support in [0.05, inf))");
  add_value(analytic, fa, "--panels", "panels", "quadrature panels across [-R, R] (default 2048)");
  add_value(analytic, fa, "--radius", "radius", "quadrature truncation radius R (default 8)");

  auto* mcc = app.add_subcommand("mc", "Monte Carlo one-step drift, theorem verification grid, SGD traces");
  add_value(mcc, fm, "--eta", "eta", "learning rate");
  add_value(mcc, fm, "--c", "c", "gradient noise standard deviation (default 1)");
  add_value(mcc, fm, "--noise", "noise", "gradient noise kind: normal or uniform");
  add_value(mcc, fm, "--gamma", "gamma", "gamma distribution");
  add_value(mcc, fm, "--beta", "beta", "beta distribution");
  add_value(mcc, fm, "--n", "n", "neurons per run (default 1e7)");
  add_switch(mcc, fm, "--verify", "verify", "run the verification grid");
  add_value(mcc, fm, "--grid", "grid", "verification grid: standard or quick");
  add_switch(mcc, fm, "--trajectory", "trajectory", "simulate one unit's (gamma, beta) trace");
  add_value(mcc, fm, "--steps", "steps", "trajectory steps");
  add_value(mcc, fm, "--stride", "stride", "trajectory record stride");
  add_value(mcc, fm, "--gamma0", "gamma0", "trajectory initial gamma");
  add_value(mcc, fm, "--beta0", "beta0", "trajectory initial beta");
  add_value(mcc, fm, "--wd", "wd", "weight decay (trajectory)");
  add_value(mcc, fm, "--alpha", "alpha", "psBN shift (trajectory)");
  add_value(mcc, fm, "--threshold", "threshold", "collapse threshold on |gamma|");
  add_value(mcc, fm, "--panels", "panels", "quadrature panels");
  add_value(mcc, fm, "--radius", "radius", "quadrature truncation radius");

  auto* decay = app.add_subcommand("decay", "psBN reactivation under pure weight decay");
  add_value(decay, fd, "--gamma", "gamma", "initial gamma (default 1)");
  add_value(decay, fd, "--beta", "beta", "initial beta (default -1.1)");
  add_value(decay, fd, "--alpha", "alpha", "psBN shift, > 0 (default 0.1)");
  add_value(decay, fd, "--wd", "wd", "weight decay lambda (default 0.01)");
  add_value(decay, fd, "--lr", "lr", "learning rate eta (default 0.1)");
  add_value(decay, fd, "--steps", "steps", "maximum steps (default 1e5)");
  add_value(decay, fd, "--stride", "stride", "record stride (default 1)");
  add_value(decay, fd, "--threshold", "threshold", "collapse threshold on |gamma|");

  auto* train = app.add_subcommand("train", "multi-round toy training experiments");
  add_value(train, ft, "--preset", "preset", "paper-fig3-toy | fig5a-lr | fig5b-gamma | fig2-random-labels | single");
  add_value(train, ft, "--seeds", "seeds", "seeds per arm (default 3)");
  add_switch(train, ft, "--random-labels", "random_labels", "train on a fixed random shuffle of the labels");
  add_value(train, ft, "--rounds", "rounds", "warm-restart rounds");
  add_value(train, ft, "--epochs", "epochs", "epochs per round");
  add_value(train, ft, "--batch", "batch", "batch size");
  add_value(train, ft, "--eta-max", "eta_max", "initial learning rate of every round");
  add_value(train, ft, "--eta-min", "eta_min", "final learning rate of every round");
  add_value(train, ft, "--momentum", "momentum", "SGD momentum");
  add_value(train, ft, "--wd", "wd", "weight decay (all parameters)");
  add_value(train, ft, "--gamma-init", "gamma_init", "initial BN scale");
  add_value(train, ft, "--activation", "activation", "relu or leaky_relu");
  add_value(train, ft, "--norm", "norm", "bn, psbn or none");
  add_value(train, ft, "--alpha", "alpha", "psBN shift");
  add_value(train, ft, "--width", "width", "hidden width");
  add_value(train, ft, "--depth", "depth", "hidden layers");
  add_value(train, ft, "--classes", "classes", "synthetic classes");
  add_value(train, ft, "--dim", "dim", "input dimension");
  add_value(train, ft, "--n-per-class", "n_per_class", "points per class");
  add_value(train, ft, "--separation", "separation", "class-mean separation");
  add_value(train, ft, "--threshold", "threshold", "collapse threshold on |gamma|");
  add_switch(train, ft, "--checkpoints", "checkpoints", "write final checkpoints");

  auto* report = app.add_subcommand("report", "re-plot figures from an existing CSV");
  add_value(report, fr, "--input", "input", "CSV written by analytic, mc, decay or train");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    auto merged = [&common](FlagMap m) {
      for (const auto& [k, v] : common) m[k] = v;
      return m;
    };
    if (analytic->parsed()) {
      return cmd_analytic(resolve("analytic", {"k_grid", "j", "gamma_grid", "beta", "drift", "eta", "c", "gamma", "panels", "radius"},
                                  {}, config_path, merged(fa)));
    }
    if (mcc->parsed()) {
      return cmd_mc(resolve("mc", {"eta", "c", "noise", "gamma", "beta", "n", "verify", "grid", "trajectory", "steps", "stride",
                                   "gamma0", "beta0", "wd", "alpha", "threshold", "panels", "radius"},
                            {}, config_path, merged(fm)));
    }
    if (decay->parsed()) {
      return cmd_decay(resolve("decay", {"gamma", "beta", "alpha", "wd", "lr", "steps", "stride", "threshold"}, {}, config_path,
                               merged(fd)));
    }
    if (train->parsed()) {
      const auto base = preset_base();
      auto ctx = resolve("train", kTrainKeys, base, config_path, merged(ft));
      return cmd_train(ctx, base, config_path, merged(ft));
    }
    if (report->parsed()) return cmd_report(resolve("report", {"input"}, {}, config_path, merged(fr)));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const StructuralError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const RuntimeError& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
