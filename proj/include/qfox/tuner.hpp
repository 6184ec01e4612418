#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qfox/baselines.hpp"
#include "qfox/envs.hpp"
#include "qfox/qlearn.hpp"
#include "qfox/random.hpp"
#include "qfox/search_space.hpp"

namespace qfox {

enum class Task { FrozenLake, CartPole };

inline std::string_view task_name(Task t) { return t == Task::FrozenLake ? "frozenlake" : "cartpole"; }

struct TaskConfig {
  Task task = Task::FrozenLake;
  std::vector<std::string> map = FrozenLakeEnv::default_map();
  bool slippery = false;
  std::size_t frozenlake_step_cap = FrozenLakeEnv::default_step_cap;
  Discretizer discretizer;
  std::size_t cartpole_step_cap = CartPoleEnv::default_step_cap;
  EpsilonSchedule epsilon;
  double initial_q = default_initial_q;
};

using AnyEnv = std::variant<FrozenLakeEnv, CartPoleEnv>;

inline AnyEnv make_env(const TaskConfig& cfg) {
  if (cfg.task == Task::FrozenLake) return FrozenLakeEnv{cfg.map, cfg.slippery, cfg.frozenlake_step_cap};
  return CartPoleEnv{cfg.discretizer, cfg.cartpole_step_cap};
}

// ---------------------------------------------------------------------------
// Composite fitness: sum over the last quarter of episodes of
// (2 R - e) / st, where the window starts at episodes - episodes / 4.

inline std::size_t fitness_window_start(std::size_t episodes) { return episodes - episodes / 4; }

inline double fitness(std::span<const EpisodeTrace> traces, std::size_t episodes) {
  if (episodes < 4) throw std::invalid_argument("fitness needs at least 4 episodes");
  if (traces.size() != episodes)
    throw std::invalid_argument("fitness: got " + std::to_string(traces.size()) + " traces for " +
                                std::to_string(episodes) + " episodes");
  double sum = 0.0;
  for (std::size_t i = fitness_window_start(episodes); i < episodes; ++i) {
    const auto& t = traces[i];
    sum += (2.0 * t.total_reward - t.td_error_mag) * (1.0 / static_cast<double>(t.steps));
  }
  return sum;
}

struct FitnessReport {
  double fitness = 0.0;
  double mean_reward_last_quarter = 0.0;
  double mean_error_last_quarter = 0.0;
  double mean_steps_last_quarter = 0.0;
  std::vector<EpisodeTrace> traces;
};

inline FitnessReport make_report(std::vector<EpisodeTrace> traces) {
  FitnessReport r;
  const std::size_t n = traces.size();
  r.fitness = fitness(traces, n);
  const std::size_t start = fitness_window_start(n);
  for (std::size_t i = start; i < n; ++i) {
    r.mean_reward_last_quarter += traces[i].total_reward;
    r.mean_error_last_quarter += traces[i].td_error_mag;
    r.mean_steps_last_quarter += static_cast<double>(traces[i].steps);
  }
  const auto w = static_cast<double>(n - start);
  r.mean_reward_last_quarter /= w;
  r.mean_error_last_quarter /= w;
  r.mean_steps_last_quarter /= w;
  r.traces = std::move(traces);
  return r;
}

// Trains a fresh learner with hp on a fresh environment seeded from `seed`.
inline TrainingRun train_on_task(const Hyperparams& hp, const TaskConfig& task, std::size_t episodes,
                                 std::uint64_t seed) {
  Rng rng = make_rng(seed);
  AnyEnv env = make_env(task);
  return std::visit([&](auto& e) { return train(e, hp, episodes, task.epsilon, rng, task.initial_q); }, env);
}

inline FitnessReport evaluate_candidate(const Hyperparams& hp, const TaskConfig& task, std::size_t episodes,
                                        std::uint64_t seed) {
  return make_report(train_on_task(hp, task, episodes, seed).traces);
}

// ---------------------------------------------------------------------------

struct Protocol {
  std::size_t population = 30;
  std::size_t max_iter = 100;
  std::size_t n_runs = 10;
  std::size_t episodes = 200;
  std::size_t eval_repeats = 1;
  std::size_t greedy_episodes = 100;

  void validate() const {
    if (population < 1) throw std::invalid_argument("population must be >= 1");
    if (n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
    if (episodes < 4) throw std::invalid_argument("episodes must be >= 4");
    if (eval_repeats < 1) throw std::invalid_argument("eval_repeats must be >= 1");
    if (greedy_episodes < 1) throw std::invalid_argument("greedy_episodes must be >= 1");
  }
};

inline Box hyperparameter_box() {
  return {{Hyperparams::alpha_min, Hyperparams::gamma_min}, {Hyperparams::alpha_max, Hyperparams::gamma_max}};
}

// Objective handed to the optimizers: the negated fitness, averaged over
// eval_repeats independent trainings.
class TuningObjective {
 public:
  TuningObjective(const TaskConfig& task, std::size_t episodes, std::size_t repeats)
      : task_(&task), episodes_(episodes), repeats_(repeats) {}

  double operator()(std::span<const double> x, std::uint64_t seed) const {
    const Hyperparams hp{x[0], x[1]};
    if (repeats_ == 1) return -evaluate_candidate(hp, *task_, episodes_, seed).fitness;
    double sum = 0.0;
    for (std::size_t r = 0; r < repeats_; ++r)
      sum += evaluate_candidate(hp, *task_, episodes_, derive_seed(seed, {stream::repeat, r})).fitness;
    return -sum / static_cast<double>(repeats_);
  }

 private:
  const TaskConfig* task_;
  std::size_t episodes_;
  std::size_t repeats_;
};

struct TuneResult {
  Algorithm algorithm = Algorithm::Fox;
  Hyperparams best_hp;
  double best_fitness = -std::numeric_limits<double>::infinity();
  std::vector<double> run_best_fitness;
  std::vector<std::vector<double>> convergence;  // best-so-far fitness per run, larger is better
  std::vector<std::string> failures;
  std::size_t evaluations = 0;
  // Final training run with best_hp.
  std::vector<double> reward_curve;
  double mean_last_quarter_reward = 0.0;
  double greedy_reward = 0.0;
  std::size_t run_count = 0;
  double wall_time = 0.0;
};

struct RetrainOutcome {
  FitnessReport report;
  double greedy_reward = 0.0;
};

// Trains with hp and scores the greedy policy over `greedy_episodes`.
inline RetrainOutcome retrain(const Hyperparams& hp, const TaskConfig& task, std::size_t episodes,
                              std::size_t greedy_episodes, std::uint64_t train_seed, std::uint64_t greedy_seed) {
  auto run = train_on_task(hp, task, episodes, train_seed);
  Rng rng = make_rng(greedy_seed);
  AnyEnv env = make_env(task);
  const double greedy = std::visit([&](auto& e) { return evaluate_greedy(e, run.q, greedy_episodes, rng); }, env);
  return {make_report(std::move(run.traces)), greedy};
}

// Runs n_runs independent optimizer runs over (alpha, gamma), keeps the
// overall best and retrains once with it. The retraining seed depends only
// on the master seed, so every optimizer is scored on the same stream.
inline TuneResult tune(const OptimizerConfig& optimizer, const TaskConfig& task, const Protocol& protocol,
                       std::uint64_t master_seed, std::size_t threads = 1) {
  protocol.validate();
  task.epsilon.validate();
  const auto t0 = std::chrono::steady_clock::now();

  TuneResult out;
  out.algorithm = optimizer.algorithm;
  out.run_count = protocol.n_runs;
  const Box box = hyperparameter_box();
  const TuningObjective objective{task, protocol.episodes, protocol.eval_repeats};

  double best_objective = std::numeric_limits<double>::infinity();
  for (std::size_t run = 0; run < protocol.n_runs; ++run) {
    SearchOptions opts{protocol.population, protocol.max_iter, derive_seed(master_seed, {stream::run, run}),
                       threads};
    try {
      auto res = run_optimizer(optimizer, objective, box, opts);
      out.evaluations += res.evaluations;
      std::vector<double> curve(res.history.size());
      for (std::size_t k = 0; k < curve.size(); ++k) curve[k] = -res.history[k];
      out.convergence.push_back(std::move(curve));
      out.run_best_fitness.push_back(-res.best.fitness);
      if (res.best.fitness < best_objective) {
        best_objective = res.best.fitness;
        out.best_hp = {res.best.position[0], res.best.position[1]};
      }
    } catch (const std::exception& e) {
      out.failures.push_back("run " + std::to_string(run) + ": " + e.what());
    }
  }
  if (out.failures.size() == protocol.n_runs) {
    std::string msg = "all tuning runs failed";
    for (const auto& f : out.failures) msg += "; " + f;
    throw std::runtime_error(msg);
  }
  out.best_fitness = -best_objective;

  auto final_run = retrain(out.best_hp, task, protocol.episodes, protocol.greedy_episodes,
                           derive_seed(master_seed, {stream::final_train}),
                           derive_seed(master_seed, {stream::greedy_eval}));
  out.reward_curve.reserve(final_run.report.traces.size());
  for (const auto& t : final_run.report.traces) out.reward_curve.push_back(t.total_reward);
  out.mean_last_quarter_reward = final_run.report.mean_reward_last_quarter;
  out.greedy_reward = final_run.greedy_reward;

  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace qfox
