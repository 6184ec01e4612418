// qfox: tune Q-learning hyperparameters with FOX and baseline optimizers.
//
//   qfox tune    --task frozenlake --optimizer fox --seed 7 --out run/
//   qfox compare --task cartpole --seed 7 --out cmp/
//   qfox eval    --task frozenlake --alpha 0.74 --gamma 0.97 --seed 7

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "qfox/experiment.hpp"

namespace {

constexpr int exit_config_error = 2;
constexpr int exit_runtime_error = 3;

struct CommonFlags {
  std::string config_file;
  std::optional<std::string> task, seed, episodes, threads, greedy_episodes;
  bool slippery = false;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_file, "flat key=value config file");
    cmd->add_option("--task", task, "frozenlake | cartpole");
    cmd->add_option("--seed", seed, "master seed (falls back to $QFOX_SEED)");
    cmd->add_option("--episodes", episodes, "training episodes per evaluation");
    cmd->add_option("--threads", threads, "worker threads for candidate evaluation");
    cmd->add_option("--greedy-episodes", greedy_episodes, "episodes for greedy-policy scoring");
    cmd->add_flag("--slippery", slippery, "slippery FrozenLake dynamics");
    cmd->add_option("--set", overrides, "extra key=value override (repeatable)");
  }

  // File first, then flags; flags win.
  std::vector<std::pair<std::string, std::string>> settings() const {
    std::vector<std::pair<std::string, std::string>> kv;
    if (!config_file.empty()) kv = qfox::read_settings_file(config_file);
    auto put = [&kv](const char* key, const std::optional<std::string>& v) {
      if (v) kv.emplace_back(key, *v);
    };
    put("task", task);
    put("seed", seed);
    put("episodes", episodes);
    put("threads", threads);
    put("greedy_episodes", greedy_episodes);
    if (slippery) kv.emplace_back("slippery", "true");
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw qfox::ConfigError("--set expects key=value, got '" + o + "'");
      kv.emplace_back(o.substr(0, eq), o.substr(eq + 1));
    }
    return kv;
  }
};

struct TuneFlags {
  std::optional<std::string> optimizer, population, max_iter, runs, eval_repeats, out;

  void attach(CLI::App* cmd) {
    cmd->add_option("--optimizer", optimizer, "fox | pso | ga | ba | random | random1 | all, or a comma list");
    cmd->add_option("-g,--population", population, "agents per optimizer");
    cmd->add_option("--max-iter", max_iter, "optimizer iterations");
    cmd->add_option("--runs", runs, "independent optimizer runs");
    cmd->add_option("--eval-repeats", eval_repeats, "trainings averaged per candidate");
    cmd->add_option("-o,--out", out, "output directory");
  }

  void append(std::vector<std::pair<std::string, std::string>>& kv) const {
    auto put = [&kv](const char* key, const std::optional<std::string>& v) {
      if (v) kv.emplace_back(key, *v);
    };
    put("optimizer", optimizer);
    put("population", population);
    put("max_iter", max_iter);
    put("n_runs", runs);
    put("eval_repeats", eval_repeats);
    put("output", out);
  }
};

bool has_key(const std::vector<std::pair<std::string, std::string>>& kv, std::string_view key) {
  for (const auto& [k, v] : kv)
    if (k == key) return true;
  return false;
}

qfox::ExperimentConfig build_config(std::vector<std::pair<std::string, std::string>> kv,
                                    std::vector<qfox::Algorithm> default_algorithms) {
  qfox::ExperimentConfig cfg;
  cfg.algorithms = std::move(default_algorithms);
  if (!has_key(kv, "seed"))
    if (const char* env = std::getenv("QFOX_SEED")) kv.insert(kv.begin(), {"seed", env});
  qfox::apply_settings(cfg, kv);
  qfox::validate(cfg);
  return cfg;
}

void print_summary(const qfox::ExperimentOutcome& outcome) {
  for (const auto* r : qfox::ranked(outcome.results))
    std::cout << qfox::display_name(r->algorithm) << ": alpha=" << qfox::format_g6(r->best_hp.alpha)
              << " gamma=" << qfox::format_g6(r->best_hp.gamma)
              << " reward=" << qfox::format_g6(r->mean_last_quarter_reward)
              << " greedy=" << qfox::format_g6(r->greedy_reward) << " fitness=" << qfox::format_g6(r->best_fitness)
              << " time_s=" << qfox::format_g6(r->wall_time) << '\n';
  std::cout << "wrote " << outcome.result_json.string() << ", " << outcome.summary_csv.string() << ", "
            << outcome.curve_csv.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Q-learning hyperparameter tuning with the FOX optimizer"};
  app.require_subcommand(1);

  CommonFlags tune_common, compare_common, eval_common;
  TuneFlags tune_flags, compare_flags;

  auto* tune_cmd = app.add_subcommand("tune", "tune alpha/gamma with one or more optimizers");
  tune_common.attach(tune_cmd);
  tune_flags.attach(tune_cmd);

  auto* compare_cmd = app.add_subcommand("compare", "tune with every optimizer under one budget");
  compare_common.attach(compare_cmd);
  compare_flags.attach(compare_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "train one alpha/gamma pair and score its greedy policy");
  eval_common.attach(eval_cmd);
  double alpha = 0.0, gamma = 0.0;
  eval_cmd->add_option("--alpha", alpha, "step size")->required();
  eval_cmd->add_option("--gamma", gamma, "discount factor")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config_error;
  }

  qfox::ExperimentConfig cfg;
  try {
    if (tune_cmd->parsed()) {
      auto kv = tune_common.settings();
      tune_flags.append(kv);
      cfg = build_config(std::move(kv), {qfox::Algorithm::Fox});
    } else if (compare_cmd->parsed()) {
      auto kv = compare_common.settings();
      compare_flags.append(kv);
      cfg = build_config(std::move(kv), {qfox::compared_algorithms.begin(), qfox::compared_algorithms.end()});
    } else {
      cfg = build_config(eval_common.settings(), {qfox::Algorithm::Fox});
      if (!qfox::Hyperparams{alpha, gamma}.valid())
        throw qfox::ConfigError("alpha must lie in [0.01, 1] and gamma in [0, 1]");
    }
  } catch (const qfox::ConfigError& e) {
    std::cerr << "qfox: config error: " << e.what() << '\n';
    return exit_config_error;
  }

  try {
    if (eval_cmd->parsed()) {
      const auto r = qfox::evaluate_hyperparams(cfg, {alpha, gamma});
      nlohmann::json j = {{"task", qfox::task_name(cfg.task.task)},
                          {"seed", cfg.seed},
                          {"alpha", r.hp.alpha},
                          {"gamma", r.hp.gamma},
                          {"fitness", r.fitness},
                          {"mean_last_quarter_reward", r.mean_last_quarter_reward},
                          {"greedy_reward", r.greedy_reward}};
      std::cout << j.dump(2) << '\n';
    } else {
      print_summary(qfox::run_experiment(cfg));
    }
  } catch (const qfox::ConfigError& e) {
    std::cerr << "qfox: config error: " << e.what() << '\n';
    return exit_config_error;
  } catch (const std::exception& e) {
    std::cerr << "qfox: " << e.what() << '\n';
    return exit_runtime_error;
  }
  return 0;
}
