#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "catsoft/actor_critic.hpp"
#include "catsoft/bench.hpp"
#include "catsoft/config.hpp"
#include "catsoft/csv.hpp"
#include "catsoft/envs.hpp"
#include "catsoft/snapshot.hpp"
#include "catsoft/stream.hpp"
#include "catsoft/tracker.hpp"

namespace fs = std::filesystem;
using catsoft::ConfigError;
using catsoft::format_number;

namespace {

struct RunConfig {
  // rule parameters
  std::string rule = "catsoft";
  std::vector<std::string> rules = {"hard", "soft", "tsoft", "atsoft", "catsoft"};
  double tau = 0.1;
  double nu = 1.0;
  double nu_lower = 1.0;
  double epsilon = 1e-5;
  double lambda = 1.0;
  double q = 1.0;
  long hard_period = 100;
  // synthetic stream
  long dim = 100;
  long horizon = 5000;
  std::string base = "constant";
  double base_value = 0.0;
  long step_at = 1;
  double step_to = 1.0;
  double slope = 0.001;
  double amplitude = 1.0;
  double period = 100.0;
  double noise_std = 0.01;
  double outlier_prob = 0.1;
  double outlier_scale = 100.0;
  // environment / training
  std::string env = "point_mass";
  long episodes = 300;
  long eval_episodes = 100;
  long max_steps = 0;       // 0: environment default
  double obs_noise = -1.0;  // negative: environment default
  double gamma = 0.99;
  double lr = 1e-3;
  double grad_clip = 1.0;
  double divergence_limit = 1e6;
  std::vector<long> hidden = {32, 32};
  std::string net;  // policy snapshot for `evaluate`
  // shared
  std::vector<std::uint64_t> seeds = {0};
  std::string out = "out";
};

// Registers every tunable once, under its config key: the CLI flag is
// "--<key>" and a config-file line is "<key>=<value>". Flags win over the
// file, so application of file values is skipped for keys seen on the
// command line.
class OptionTable {
 public:
  explicit OptionTable(CLI::App& app) : app_(app) {}

  void num(const std::string& key, double& field, const std::string& desc) {
    reg(key, app_.add_option("--" + key, field, desc),
        [&field, key](const std::string& v) { field = catsoft::to_double(key, v); });
  }

  void integer(const std::string& key, long& field, const std::string& desc) {
    reg(key, app_.add_option("--" + key, field, desc),
        [&field, key](const std::string& v) { field = catsoft::to_long(key, v); });
  }

  void text(const std::string& key, std::string& field, const std::string& desc) {
    reg(key, app_.add_option("--" + key, field, desc),
        [&field](const std::string& v) { field = v; });
  }

  void text_list(const std::string& key, std::vector<std::string>& field, const std::string& desc) {
    reg(key, app_.add_option("--" + key, field, desc)->delimiter(','),
        [&field](const std::string& v) { field = split(v); });
  }

  void int_list(const std::string& key, std::vector<long>& field, const std::string& desc) {
    reg(key, app_.add_option("--" + key, field, desc)->delimiter(','),
        [&field, key](const std::string& v) {
          field.clear();
          for (const auto& tok : split(v)) field.push_back(catsoft::to_long(key, tok));
        });
  }

  void seed_list(const std::string& key, std::vector<std::uint64_t>& field,
                 const std::string& desc) {
    reg(key, app_.add_option("--" + key, field, desc)->delimiter(','),
        [&field, key](const std::string& v) {
          field.clear();
          for (const auto& tok : split(v)) field.push_back(catsoft::to_u64(key, tok));
        });
  }

  // File values fill in everything the command line left untouched.
  void apply_file(const catsoft::KeyValues& kvs) const {
    for (const auto& [key, value] : kvs) {
      const auto it = table_.find(key);
      if (it == table_.end()) throw ConfigError("unknown config key: " + key);
      if (it->second.first->count() > 0) continue;  // flag overrides file
      it->second.second(value);
    }
  }

 private:
  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      const auto comma = s.find(',', start);
      out.push_back(s.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  }

  void reg(const std::string& key, CLI::Option* opt, std::function<void(const std::string&)> set) {
    table_[key] = {opt, std::move(set)};
  }

  CLI::App& app_;
  std::map<std::string, std::pair<CLI::Option*, std::function<void(const std::string&)>>> table_;
};

void check_range(bool ok, const std::string& field, const std::string& requirement) {
  if (!ok) throw ConfigError(field + " must be " + requirement);
}

void validate_cfg(const RunConfig& c) {
  catsoft::rule_from_name(c.rule);
  check_range(!c.rules.empty(), "rules", "nonempty");
  for (const auto& r : c.rules) catsoft::rule_from_name(r);
  check_range(c.tau > 0.0 && c.tau <= 1.0, "tau", "in (0,1]");
  check_range(c.nu > 0.0, "nu", "positive");
  check_range(c.nu_lower > 0.0, "nu-lower", "positive");
  check_range(c.epsilon > 0.0, "epsilon", "positive");
  check_range(c.lambda >= 0.0 && c.lambda <= 1.0, "lambda", "in [0,1]");
  check_range(c.q >= 0.0 && c.q <= 1.0, "q", "in [0,1]");
  check_range(c.hard_period >= 1, "hard-period", "positive");
  check_range(c.dim >= 1, "dim", "positive");
  check_range(c.horizon >= 1, "horizon", "positive");
  check_range(c.base == "constant" || c.base == "step" || c.base == "ramp" || c.base == "sinusoid",
              "base", "one of constant|step|ramp|sinusoid");
  check_range(c.period > 0.0, "period", "positive");
  check_range(c.noise_std >= 0.0, "noise-std", "nonnegative");
  check_range(c.outlier_prob >= 0.0 && c.outlier_prob <= 1.0, "outlier-prob", "in [0,1]");
  check_range(c.outlier_scale >= 0.0, "outlier-scale", "nonnegative");
  check_range(c.env == "point_mass" || c.env == "pendulum", "env", "one of point_mass|pendulum");
  check_range(c.episodes >= 0, "episodes", "nonnegative");
  check_range(c.eval_episodes >= 1, "eval-episodes", "positive");
  check_range(c.max_steps >= 0, "max-steps", "nonnegative (0 = env default)");
  check_range(c.gamma >= 0.0 && c.gamma < 1.0, "gamma", "in [0,1)");
  check_range(c.lr > 0.0, "lr", "positive");
  check_range(c.divergence_limit > 0.0, "divergence-limit", "positive");
  check_range(!c.hidden.empty(), "hidden", "nonempty");
  for (long h : c.hidden) check_range(h >= 1, "hidden", "positive");
  check_range(!c.seeds.empty(), "seed", "nonempty");
  check_range(!c.out.empty(), "out", "nonempty");
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_same_v<T, std::string>) s += xs[i];
    else s += std::to_string(xs[i]);
  }
  return s;
}

// The echo is itself a loadable config file, so a run can be reproduced
// with --config <out>/config.txt alone.
void echo_config(const RunConfig& c, const std::string& command) {
  std::ofstream out(fs::path(c.out) / "config.txt", std::ios::binary);
  if (!out) throw ConfigError("cannot write config echo in: " + c.out);
  out << "# resolved configuration (command: " << command << ")\n";
  out << "rule=" << c.rule << '\n';
  out << "rules=" << join(c.rules) << '\n';
  out << "tau=" << format_number(c.tau) << '\n';
  out << "nu=" << format_number(c.nu) << '\n';
  out << "nu-lower=" << format_number(c.nu_lower) << '\n';
  out << "epsilon=" << format_number(c.epsilon) << '\n';
  out << "lambda=" << format_number(c.lambda) << '\n';
  out << "q=" << format_number(c.q) << '\n';
  out << "hard-period=" << c.hard_period << '\n';
  out << "dim=" << c.dim << '\n';
  out << "horizon=" << c.horizon << '\n';
  out << "base=" << c.base << '\n';
  out << "base-value=" << format_number(c.base_value) << '\n';
  out << "step-at=" << c.step_at << '\n';
  out << "step-to=" << format_number(c.step_to) << '\n';
  out << "slope=" << format_number(c.slope) << '\n';
  out << "amplitude=" << format_number(c.amplitude) << '\n';
  out << "period=" << format_number(c.period) << '\n';
  out << "noise-std=" << format_number(c.noise_std) << '\n';
  out << "outlier-prob=" << format_number(c.outlier_prob) << '\n';
  out << "outlier-scale=" << format_number(c.outlier_scale) << '\n';
  out << "env=" << c.env << '\n';
  out << "episodes=" << c.episodes << '\n';
  out << "eval-episodes=" << c.eval_episodes << '\n';
  out << "max-steps=" << c.max_steps << '\n';
  out << "obs-noise=" << format_number(c.obs_noise) << '\n';
  out << "gamma=" << format_number(c.gamma) << '\n';
  out << "lr=" << format_number(c.lr) << '\n';
  out << "grad-clip=" << format_number(c.grad_clip) << '\n';
  out << "divergence-limit=" << format_number(c.divergence_limit) << '\n';
  out << "hidden=" << join(c.hidden) << '\n';
  if (!c.net.empty()) out << "net=" << c.net << '\n';
  out << "seed=" << join(c.seeds) << '\n';
  out << "out=" << c.out << '\n';
}

catsoft::UpdateConfig<double> update_config(const RunConfig& c, const std::string& rule) {
  catsoft::UpdateConfig<double> u;
  u.rule = catsoft::rule_from_name(rule);
  u.tau = c.tau;
  u.nu = c.nu;
  u.nu_lower = c.nu_lower;
  u.epsilon = c.epsilon;
  u.lambda_c = c.lambda;
  u.q = c.q;
  u.hard_period = c.hard_period;
  return u;
}

catsoft::StreamSpec stream_spec(const RunConfig& c, std::uint64_t seed) {
  catsoft::StreamSpec s;
  s.dim = c.dim;
  s.horizon = c.horizon;
  s.noise_std = c.noise_std;
  s.outlier_prob = c.outlier_prob;
  s.outlier_scale = c.outlier_scale;
  s.seed = seed;
  auto& b = s.base;
  if (c.base == "constant") {
    b.kind = catsoft::BaseTrajectory::Kind::constant;
    b.value = c.base_value;
  } else if (c.base == "step") {
    b.kind = catsoft::BaseTrajectory::Kind::step;
    b.step_at = c.step_at;
    b.step_to = c.step_to;
  } else if (c.base == "ramp") {
    b.kind = catsoft::BaseTrajectory::Kind::ramp;
    b.slope = c.slope;
  } else {
    b.kind = catsoft::BaseTrajectory::Kind::sinusoid;
    b.amplitude = c.amplitude;
    b.period = c.period;
  }
  return s;
}

catsoft::EnvSpec<double> env_spec(const RunConfig& c) {
  auto spec = catsoft::make_env<double>(c.env);
  if (c.max_steps > 0) spec.max_steps = c.max_steps;
  if (c.obs_noise >= 0.0) spec.obs_noise_std = c.obs_noise;
  return spec;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= double(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return {mean, std::sqrt(acc / double(xs.size() - 1))};
}

const std::vector<std::string> kTrackColumns = {"step",  "deviation_mean", "robustness",
                                                "tau1",  "tau2",           "tau_c",
                                                "nu_tilde", "tracking_error"};

// One tracker run with full per-step logging; returns the metrics.
catsoft::TrackMetrics<double> tracked_run(const std::vector<catsoft::Vec<double>>& stream,
                                          const catsoft::UpdateConfig<double>& ucfg,
                                          const catsoft::BaseTrajectory& base,
                                          const std::string& csv_path) {
  catsoft::CsvWriter csv(csv_path, kTrackColumns);
  auto sink = [&csv](const catsoft::TrackRow<double>& r) {
    csv.row({format_number(r.step), format_number(r.deviation_mean), format_number(r.robustness),
             format_number(r.tau1), format_number(r.tau2), format_number(r.tau_c),
             format_number(r.nu_tilde), format_number(r.tracking_error)});
  };
  return catsoft::run_tracker<double>(stream, ucfg, base, sink);
}

int run_synth_like(const RunConfig& c, const std::string& command,
                   const std::vector<std::string>& rules) {
  catsoft::CsvWriter summary((fs::path(c.out) / "summary.csv").string(),
                             {"rule", "seeds", "tracking_rmse_mean", "tracking_rmse_std",
                              "final_nu_tilde_mean"});
  // streams are generated per seed and shared by every rule
  std::map<std::string, std::vector<double>> rmse;
  std::map<std::string, std::vector<double>> nus;
  for (std::uint64_t seed : c.seeds) {
    const auto spec = stream_spec(c, seed);
    catsoft::validate(spec);
    const auto stream = catsoft::generate_stream<double>(spec);
    for (const auto& rule : rules) {
      const auto csv_path =
          fs::path(c.out) / (command + "_" + rule + "_seed" + std::to_string(seed) + ".csv");
      const auto metrics = tracked_run(stream, update_config(c, rule), spec.base, csv_path.string());
      rmse[rule].push_back(metrics.tracking_rmse);
      nus[rule].push_back(metrics.final_nu_tilde);
      std::cout << command << " rule=" << rule << " seed=" << seed
                << " rmse=" << metrics.tracking_rmse << '\n';
    }
  }
  for (const auto& rule : rules) {
    const auto [m, s] = mean_std(rmse[rule]);
    const auto [nm, ns] = mean_std(nus[rule]);
    summary.row({rule, format_number(long(c.seeds.size())), format_number(m), format_number(s),
                 format_number(nm)});
  }
  return 0;
}

int run_train(const RunConfig& c) {
  const auto espec = env_spec(c);
  const auto rule = c.rule;
  catsoft::CsvWriter summary((fs::path(c.out) / "summary.csv").string(),
                             {"rule", "seeds", "eval_return_mean", "eval_return_std",
                              "baseline_return_mean", "baseline_return_std", "diverged_runs"});
  std::vector<double> evals, baselines;
  long diverged_runs = 0;

  for (std::uint64_t seed : c.seeds) {
    catsoft::TrainerConfig<double> tc;
    tc.gamma = c.gamma;
    tc.learning_rate = c.lr;
    tc.episodes = c.episodes;
    tc.value_update = update_config(c, rule);
    tc.policy_update = update_config(c, rule);
    tc.eval_episodes = c.eval_episodes;
    tc.seed = seed;
    tc.hidden.assign(c.hidden.begin(), c.hidden.end());
    tc.grad_clip = c.grad_clip;
    tc.divergence_limit = c.divergence_limit;

    const auto result = catsoft::train(tc, espec);

    const auto tag = rule + "_seed" + std::to_string(seed);
    catsoft::CsvWriter csv((fs::path(c.out) / ("train_" + tag + ".csv")).string(),
                           {"episode", "return", "mean_deviation_V", "mean_deviation_pi",
                            "mean_robustness", "divergence_flag"});
    for (const auto& row : result.curve)
      csv.row({format_number(row.episode), format_number(row.ret),
               format_number(row.mean_deviation_v), format_number(row.mean_deviation_pi),
               format_number(row.mean_robustness), row.diverged ? "1" : "0"});

    // the evaluation stream is disjoint from the training stream by seed offset
    const std::uint64_t eval_seed = seed + 10000;
    const auto stats = catsoft::evaluate(result.policy, espec, c.eval_episodes, eval_seed);
    const auto base = catsoft::evaluate(result.initial_policy, espec, c.eval_episodes, eval_seed);
    evals.push_back(stats.mean);
    baselines.push_back(base.mean);
    if (result.diverged) ++diverged_runs;

    catsoft::Json nets;
    nets["policy"] = catsoft::policy_to_json(result.policy);
    nets["value"] = catsoft::mlp_to_json(result.value_net);
    catsoft::save_json((fs::path(c.out) / ("net_" + tag + ".json")).string(), nets);

    catsoft::Json rec;
    rec["command"] = "train";
    rec["rule"] = rule;
    rec["seed"] = seed;
    rec["eval_episodes"] = c.eval_episodes;
    rec["eval_return_mean"] = stats.mean;
    rec["eval_return_std"] = stats.stddev;
    rec["baseline_return_mean"] = base.mean;
    rec["baseline_return_std"] = base.stddev;
    rec["diverged"] = result.diverged;
    rec["diverged_step"] = result.diverged_step;
    rec["skipped_samples"] = result.skipped_samples;
    catsoft::save_json((fs::path(c.out) / ("eval_" + tag + ".json")).string(), rec);

    std::cout << "train rule=" << rule << " seed=" << seed << " eval=" << stats.mean
              << " baseline=" << base.mean << (result.diverged ? " DIVERGED" : "") << '\n';
  }

  const auto [em, es] = mean_std(evals);
  const auto [bm, bs] = mean_std(baselines);
  summary.row({rule, format_number(long(c.seeds.size())), format_number(em), format_number(es),
               format_number(bm), format_number(bs), format_number(diverged_runs)});
  return diverged_runs > 0 ? 1 : 0;
}

int run_evaluate(const RunConfig& c) {
  const auto espec = env_spec(c);
  const std::uint64_t seed = c.seeds.front();
  const std::string source = c.net.empty() ? "random-init" : c.net;
  const auto policy = [&]() -> catsoft::GaussianPolicy<double> {
    if (!c.net.empty()) {
      auto j = catsoft::load_json(c.net);
      auto p = catsoft::policy_from_json<double>(j.contains("policy") ? j.at("policy") : j);
      if (p.net.input_dim() != espec.obs_dim || p.net.output_dim() != espec.act_dim)
        throw catsoft::ShapeError("policy snapshot does not fit env " + espec.name);
      return p;
    }
    // no snapshot: seeded random-init policy, the baseline convention
    catsoft::Rng rng(seed);
    std::vector<Eigen::Index> dims{espec.obs_dim};
    for (long h : c.hidden) dims.push_back(h);
    dims.push_back(espec.act_dim);
    return catsoft::GaussianPolicy<double>::init(dims, rng);
  }();

  const auto stats = catsoft::evaluate(policy, espec, c.eval_episodes, seed);
  catsoft::Json rec;
  rec["command"] = "evaluate";
  rec["env"] = espec.name;
  rec["policy"] = source;
  rec["episodes"] = c.eval_episodes;
  rec["seed"] = seed;
  rec["return_mean"] = stats.mean;
  rec["return_std"] = stats.stddev;
  catsoft::save_json((fs::path(c.out) / "evaluate.json").string(), rec);
  std::cout << "evaluate env=" << espec.name << " policy=" << source << " mean=" << stats.mean
            << " std=" << stats.stddev << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  std::string config_path;

  CLI::App app{"target-network update rules: synthetic tracking and actor-critic benchmarks"};
  app.require_subcommand(1);
  auto* synth = app.add_subcommand("synth", "run one rule on a synthetic noisy stream");
  auto* compare = app.add_subcommand("compare", "run several rules on identical streams");
  auto* train = app.add_subcommand("train", "actor-critic training with the chosen rule");
  auto* evaluate = app.add_subcommand("evaluate", "roll out a policy snapshot (or random init)");
  for (auto* sub : {synth, compare, train, evaluate}) sub->fallthrough();

  app.add_option("--config", config_path, "flat key=value config file; flags take precedence");

  OptionTable table(app);
  table.text("rule", cfg.rule, "update rule: hard|soft|tsoft|atsoft|catsoft");
  table.text_list("rules", cfg.rules, "rules for `compare` (comma separated)");
  table.num("tau", cfg.tau, "base update ratio, in (0,1]");
  table.num("nu", cfg.nu, "degrees of freedom (tsoft)");
  table.num("nu-lower", cfg.nu_lower, "degrees-of-freedom floor (atsoft/catsoft)");
  table.num("epsilon", cfg.epsilon, "scale floor");
  table.num("lambda", cfg.lambda, "consolidation strength, in [0,1]");
  table.num("q", cfg.q, "consolidation quantile level, in [0,1]");
  table.integer("hard-period", cfg.hard_period, "hard update period");
  table.integer("dim", cfg.dim, "stream dimension");
  table.integer("horizon", cfg.horizon, "stream length");
  table.text("base", cfg.base, "base trajectory: constant|step|ramp|sinusoid");
  table.num("base-value", cfg.base_value, "constant base level");
  table.integer("step-at", cfg.step_at, "step base: jump time");
  table.num("step-to", cfg.step_to, "step base: level after the jump");
  table.num("slope", cfg.slope, "ramp base slope");
  table.num("amplitude", cfg.amplitude, "sinusoid amplitude");
  table.num("period", cfg.period, "sinusoid period (steps)");
  table.num("noise-std", cfg.noise_std, "Gaussian noise std");
  table.num("outlier-prob", cfg.outlier_prob, "per-element outlier probability");
  table.num("outlier-scale", cfg.outlier_scale, "outlier magnitude");
  table.text("env", cfg.env, "environment: point_mass|pendulum");
  table.integer("episodes", cfg.episodes, "training episodes");
  table.integer("eval-episodes", cfg.eval_episodes, "evaluation episodes");
  table.integer("max-steps", cfg.max_steps, "env step budget (0: env default)");
  table.num("obs-noise", cfg.obs_noise, "observation noise std (negative: env default)");
  table.num("gamma", cfg.gamma, "discount factor, in [0,1)");
  table.num("lr", cfg.lr, "SGD learning rate");
  table.num("grad-clip", cfg.grad_clip, "global gradient-norm cap per net (<=0: off)");
  table.num("divergence-limit", cfg.divergence_limit, "abort when |param| exceeds this");
  table.int_list("hidden", cfg.hidden, "hidden layer widths (comma separated)");
  table.text("net", cfg.net, "policy snapshot JSON for `evaluate`");
  table.seed_list("seed", cfg.seeds, "seeds (comma separated)");
  table.text("out", cfg.out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) table.apply_file(catsoft::load_key_values(config_path));
    validate_cfg(cfg);

    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw ConfigError("cannot create output directory: " + cfg.out);

    const std::string command = app.get_subcommands().front()->get_name();
    echo_config(cfg, command);

    if (command == "synth") return run_synth_like(cfg, "synth", {cfg.rule});
    if (command == "compare") return run_synth_like(cfg, "compare", cfg.rules);
    if (command == "train") return run_train(cfg);
    return run_evaluate(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
