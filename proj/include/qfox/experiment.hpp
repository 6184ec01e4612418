#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qfox/baselines.hpp"
#include "qfox/parallel.hpp"
#include "qfox/tuner.hpp"

namespace qfox {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  TaskConfig task;
  std::vector<Algorithm> algorithms{Algorithm::Fox};
  OptimizerConfig optimizer;  // algorithm field is overridden per run
  Protocol protocol;
  std::uint64_t seed = 0;
  std::filesystem::path output = "qfox_out";
  std::size_t threads = hardware_threads();
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  for (;;) {
    const auto next = s.find(sep, pos);
    parts.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return parts;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    if (v.empty() || v.front() == '-') throw std::invalid_argument(v);
    std::size_t used = 0;
    const auto n = std::stoull(v, &used, 0);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
}

inline std::size_t to_count(const std::string& key, const std::string& v, std::size_t min) {
  const auto n = to_u64(key, v);
  if (n < min) throw ConfigError("config key '" + key + "' must be >= " + std::to_string(min));
  return static_cast<std::size_t>(n);
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

inline double in_range(const std::string& key, const std::string& v, double lo, double hi) {
  const double d = to_double(key, v);
  if (d < lo || d > hi)
    throw ConfigError("config key '" + key + "' must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                      "]");
  return d;
}

inline Interval to_interval(const std::string& key, const std::string& v) {
  const auto parts = split(v, ',');
  if (parts.size() != 2) throw ConfigError("config key '" + key + "': expected 'lo,hi'");
  Interval iv{to_double(key, parts[0]), to_double(key, parts[1])};
  if (!(iv.lo < iv.hi)) throw ConfigError("config key '" + key + "': lo must be < hi");
  return iv;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

inline const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    t["task"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (v == "frozenlake") c.task.task = Task::FrozenLake;
      else if (v == "cartpole") c.task.task = Task::CartPole;
      else throw ConfigError("config key '" + k + "': unknown task '" + v + "'");
    };
    t["optimizer"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (v == "all") {
        c.algorithms.assign(compared_algorithms.begin(), compared_algorithms.end());
        return;
      }
      std::vector<Algorithm> algs;
      for (const auto& name : split(v, ',')) {
        auto a = parse_algorithm(name);
        if (!a) throw ConfigError("config key '" + k + "': unknown optimizer '" + name + "'");
        if (std::find(algs.begin(), algs.end(), *a) == algs.end()) algs.push_back(*a);
      }
      c.algorithms = std::move(algs);
    };
    t["seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); };
    t["population"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.protocol.population = to_count(k, v, 1);
    };
    t["max_iter"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.protocol.max_iter = to_count(k, v, 0);
    };
    t["n_runs"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.protocol.n_runs = to_count(k, v, 1);
    };
    t["episodes"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.protocol.episodes = to_count(k, v, 4);
    };
    t["eval_repeats"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.protocol.eval_repeats = to_count(k, v, 1);
    };
    t["greedy_episodes"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.protocol.greedy_episodes = to_count(k, v, 1);
    };
    t["threads"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.threads = to_count(k, v, 1);
    };
    t["output"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (v.empty()) throw ConfigError("config key '" + k + "' must not be empty");
      c.output = v;
    };
    t["slippery"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.task.slippery = to_bool(k, v);
    };
    t["map"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      auto rows = split(v, '/');
      try {
        FrozenLakeEnv probe{rows};
      } catch (const std::invalid_argument& e) {
        throw ConfigError("config key '" + k + "': " + e.what());
      }
      c.task.map = std::move(rows);
    };
    t["frozenlake_step_cap"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.task.frozenlake_step_cap = to_count(k, v, 1);
    };
    t["cartpole_step_cap"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.task.cartpole_step_cap = to_count(k, v, 1);
    };
    t["bins"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      const auto parts = split(v, ',');
      if (parts.size() != 4) throw ConfigError("config key '" + k + "': expected four bin counts");
      for (std::size_t d = 0; d < 4; ++d) c.task.discretizer.bins[d] = to_count(k, parts[d], 1);
    };
    const char* bound_keys[] = {"bounds_x", "bounds_x_dot", "bounds_theta", "bounds_theta_dot"};
    for (std::size_t d = 0; d < 4; ++d)
      t[bound_keys[d]] = [d](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.task.discretizer.bounds[d] = to_interval(k, v);
      };
    t["epsilon_start"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.task.epsilon.start = in_range(k, v, 0.0, 1.0);
    };
    t["epsilon_decay"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.task.epsilon.decay = in_range(k, v, 0.0, 1.0);
    };
    t["initial_q"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.task.initial_q = in_range(k, v, -1e6, 1e6);
    };
    t["epsilon_min"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.task.epsilon.floor = in_range(k, v, 0.0, 1.0);
    };

    auto real = [&t](const char* key, auto member, double lo, double hi) {
      t[key] = [member, lo, hi](ExperimentConfig& c, const std::string& k, const std::string& v) {
        member(c) = in_range(k, v, lo, hi);
      };
    };
    constexpr double big = 1e6;
    real("fox_c1", [](ExperimentConfig& c) -> double& { return c.optimizer.fox.c1; }, 0.0, big);
    real("fox_c2", [](ExperimentConfig& c) -> double& { return c.optimizer.fox.c2; }, 0.0, big);
    real("pso_inertia", [](ExperimentConfig& c) -> double& { return c.optimizer.pso.inertia; }, 0.0, 2.0);
    real("pso_cognitive", [](ExperimentConfig& c) -> double& { return c.optimizer.pso.cognitive; }, 0.0, 10.0);
    real("pso_social", [](ExperimentConfig& c) -> double& { return c.optimizer.pso.social; }, 0.0, 10.0);
    real("pso_velocity_clamp", [](ExperimentConfig& c) -> double& { return c.optimizer.pso.velocity_clamp; }, 0.0,
         1.0);
    real("ga_crossover_rate", [](ExperimentConfig& c) -> double& { return c.optimizer.ga.crossover_rate; }, 0.0,
         1.0);
    real("ga_mutation_rate", [](ExperimentConfig& c) -> double& { return c.optimizer.ga.mutation_rate; }, 0.0, 1.0);
    real("ga_mutation_sigma", [](ExperimentConfig& c) -> double& { return c.optimizer.ga.mutation_sigma; }, 0.0,
         1.0);
    t["ga_tournament"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.optimizer.ga.tournament = to_count(k, v, 1);
    };
    t["ga_elites"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.optimizer.ga.elites = to_count(k, v, 0);
    };
    real("ba_freq_min", [](ExperimentConfig& c) -> double& { return c.optimizer.ba.freq_min; }, 0.0, big);
    real("ba_freq_max", [](ExperimentConfig& c) -> double& { return c.optimizer.ba.freq_max; }, 0.0, big);
    real("ba_loudness", [](ExperimentConfig& c) -> double& { return c.optimizer.ba.loudness; }, 0.0, big);
    real("ba_pulse_rate", [](ExperimentConfig& c) -> double& { return c.optimizer.ba.pulse_rate; }, 0.0, 1.0);
    real("ba_alpha", [](ExperimentConfig& c) -> double& { return c.optimizer.ba.loudness_decay; }, 0.0, 1.0);
    real("ba_gamma", [](ExperimentConfig& c) -> double& { return c.optimizer.ba.pulse_growth; }, 0.0, big);
    return t;
  }();
  return table;
}

}  // namespace config_detail

// Applies one key/value pair; unknown keys and bad values throw ConfigError.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = config_detail::setters();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, key, config_detail::trim(value));
}

// Flat `key = value` lines; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> parse_settings(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto text = config_detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    auto key = config_detail::trim(std::string_view(text).substr(0, eq));
    auto value = config_detail::trim(std::string_view(text).substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

inline std::vector<std::pair<std::string, std::string>> read_settings_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  return parse_settings(in);
}

inline void apply_settings(ExperimentConfig& cfg, const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) apply_setting(cfg, k, v);
}

// Cross-field checks that single settings cannot catch.
inline void validate(const ExperimentConfig& cfg) {
  try {
    cfg.protocol.validate();
    cfg.task.epsilon.validate();
    (void)make_env(cfg.task);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cfg.algorithms.empty()) throw ConfigError("no optimizer selected");
  if (cfg.optimizer.ba.freq_min > cfg.optimizer.ba.freq_max) throw ConfigError("ba_freq_min must be <= ba_freq_max");
}

// ---------------------------------------------------------------------------

// Min-max scaling into [0, 1]; a constant list maps to zeros.
inline std::vector<double> normalize_curve(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("cannot normalize an empty curve");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, range = *hi_it - *lo_it;
  std::vector<double> out(values.size(), 0.0);
  if (range > 0.0)
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / range;
  return out;
}

inline std::string format_g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline nlohmann::json to_json(const TuneResult& r) {
  return {
      {"method", display_name(r.algorithm)},
      {"best_hp", {{"alpha", r.best_hp.alpha}, {"gamma", r.best_hp.gamma}}},
      {"best_fitness", r.best_fitness},
      {"run_count", r.run_count},
      {"run_best_fitness", r.run_best_fitness},
      {"convergence", r.convergence},
      {"failures", r.failures},
      {"evaluations", r.evaluations},
      {"reward_curve", r.reward_curve},
      {"mean_last_quarter_reward", r.mean_last_quarter_reward},
      {"greedy_reward", r.greedy_reward},
      {"wall_time", r.wall_time},
  };
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json algs = nlohmann::json::array();
  for (auto a : cfg.algorithms) algs.push_back(key_name(a));
  const auto& d = cfg.task.discretizer;
  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& b : d.bounds) bounds.push_back({b.lo, b.hi});
  return {
      {"task", task_name(cfg.task.task)},
      {"optimizers", algs},
      {"seed", cfg.seed},
      {"protocol",
       {{"population", cfg.protocol.population},
        {"max_iter", cfg.protocol.max_iter},
        {"n_runs", cfg.protocol.n_runs},
        {"episodes", cfg.protocol.episodes},
        {"eval_repeats", cfg.protocol.eval_repeats},
        {"greedy_episodes", cfg.protocol.greedy_episodes}}},
      {"frozenlake",
       {{"map", cfg.task.map}, {"slippery", cfg.task.slippery}, {"step_cap", cfg.task.frozenlake_step_cap}}},
      {"cartpole", {{"bins", d.bins}, {"bounds", bounds}, {"step_cap", cfg.task.cartpole_step_cap}}},
      {"epsilon",
       {{"start", cfg.task.epsilon.start}, {"decay", cfg.task.epsilon.decay}, {"min", cfg.task.epsilon.floor}}},
      {"initial_q", cfg.task.initial_q},
  };
}

struct ExperimentOutcome {
  std::vector<TuneResult> results;  // in configured optimizer order
  std::filesystem::path result_json, summary_csv, curve_csv;
};

// Results ordered by reward, best first; ties keep configured order.
inline std::vector<const TuneResult*> ranked(const std::vector<TuneResult>& results) {
  std::vector<const TuneResult*> order;
  for (const auto& r : results) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [](const TuneResult* a, const TuneResult* b) {
    return a->mean_last_quarter_reward > b->mean_last_quarter_reward;
  });
  return order;
}

inline std::string summary_csv(const std::vector<TuneResult>& results) {
  std::ostringstream os;
  os << "method,alpha,gamma,reward,time_s\n";
  for (const auto* r : ranked(results))
    os << display_name(r->algorithm) << ',' << format_g6(r->best_hp.alpha) << ',' << format_g6(r->best_hp.gamma)
       << ',' << format_g6(r->mean_last_quarter_reward) << ',' << format_g6(r->wall_time) << '\n';
  return os.str();
}

inline std::string curve_csv(const std::vector<TuneResult>& results) {
  std::ostringstream os;
  os << "method,episode,reward,normalized\n";
  for (const auto& r : results) {
    const auto norm = normalize_curve(r.reward_curve);
    for (std::size_t i = 0; i < r.reward_curve.size(); ++i)
      os << display_name(r.algorithm) << ',' << i << ',' << format_g6(r.reward_curve[i]) << ','
         << format_g6(norm[i]) << '\n';
  }
  return os.str();
}

inline std::string result_json(const ExperimentConfig& cfg, const std::vector<TuneResult>& results) {
  nlohmann::json j = to_json(cfg);
  j["results"] = nlohmann::json::array();
  for (const auto& r : results) j["results"].push_back(to_json(r));
  return j.dump(2) + "\n";
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out.flush()) throw std::runtime_error("failed writing '" + path.string() + "'");
}

// Tunes every configured optimizer under identical budget and seeds, then
// writes result.json, summary.csv and curve.csv into cfg.output.
inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  std::error_code ec;
  std::filesystem::create_directories(cfg.output, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + cfg.output.string() + "': " + ec.message());

  ExperimentOutcome out;
  for (auto alg : cfg.algorithms) {
    OptimizerConfig oc = cfg.optimizer;
    oc.algorithm = alg;
    out.results.push_back(tune(oc, cfg.task, cfg.protocol, cfg.seed, cfg.threads));
  }

  out.result_json = cfg.output / "result.json";
  out.summary_csv = cfg.output / "summary.csv";
  out.curve_csv = cfg.output / "curve.csv";
  write_text(out.result_json, result_json(cfg, out.results));
  write_text(out.summary_csv, summary_csv(out.results));
  write_text(out.curve_csv, curve_csv(out.results));
  return out;
}

struct EvalReport {
  Hyperparams hp;
  double fitness = 0.0;
  double mean_last_quarter_reward = 0.0;
  double greedy_reward = 0.0;
};

// Replays one hyperparameter pair with the same seed derivation the tuner
// uses for its final retraining.
inline EvalReport evaluate_hyperparams(const ExperimentConfig& cfg, const Hyperparams& hp) {
  validate(cfg);
  if (!hp.valid()) throw ConfigError("alpha must lie in [0.01, 1] and gamma in [0, 1]");
  auto r = retrain(hp, cfg.task, cfg.protocol.episodes, cfg.protocol.greedy_episodes,
                   derive_seed(cfg.seed, {stream::final_train}), derive_seed(cfg.seed, {stream::greedy_eval}));
  return {hp, r.report.fitness, r.report.mean_reward_last_quarter, r.greedy_reward};
}

}  // namespace qfox
