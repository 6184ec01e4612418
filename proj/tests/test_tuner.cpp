#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <span>
#include <stdexcept>
#include <vector>

#include "qfox/tuner.hpp"

using namespace qfox;

namespace {

std::vector<EpisodeTrace> constant_traces(std::size_t n, double reward, double err, std::size_t steps) {
  return std::vector<EpisodeTrace>(n, EpisodeTrace{reward, err, steps});
}

Protocol tiny_protocol() {
  Protocol p;
  p.population = 3;
  p.max_iter = 2;
  p.n_runs = 2;
  p.episodes = 20;
  p.greedy_episodes = 5;
  return p;
}

}  // namespace

// 50 window episodes of (2*1 - 0) / 10 each.
TEST(Fitness, HandExample) {
  const auto t = constant_traces(200, 1.0, 0.0, 10);
  EXPECT_DOUBLE_EQ(fitness(t, 200), 10.0);
}

TEST(Fitness, ZeroRewardAndError) {
  const auto t = constant_traces(200, 0.0, 0.0, 7);
  EXPECT_EQ(fitness(t, 200), 0.0);
}

TEST(Fitness, WindowStartsAtThreeQuarters) {
  EXPECT_EQ(fitness_window_start(200), 150u);
  EXPECT_EQ(fitness_window_start(4), 3u);
  EXPECT_EQ(fitness_window_start(7), 6u);
  auto t = constant_traces(200, 1.0, 0.25, 5);
  const double base = fitness(t, 200);
  t[149].total_reward = 123.0;
  EXPECT_EQ(fitness(t, 200), base);
  t[150].total_reward = 123.0;
  EXPECT_NE(fitness(t, 200), base);
}

TEST(Fitness, RejectsBadInput) {
  const auto t = constant_traces(10, 1.0, 0.0, 1);
  EXPECT_THROW(fitness(t, 11), std::invalid_argument);
  EXPECT_THROW(fitness(std::span<const EpisodeTrace>(t).first(3), 3), std::invalid_argument);
}

TEST(Fitness, ReportMeans) {
  std::vector<EpisodeTrace> t;
  for (std::size_t i = 0; i < 8; ++i) t.push_back({double(i), 0.5, i + 1});
  const auto r = make_report(t);
  // Window is episodes 6 and 7.
  EXPECT_DOUBLE_EQ(r.mean_reward_last_quarter, 6.5);
  EXPECT_DOUBLE_EQ(r.mean_steps_last_quarter, 7.5);
  EXPECT_DOUBLE_EQ(r.fitness, (12.0 - 0.5) / 7.0 + (14.0 - 0.5) / 8.0);
}

TEST(EvaluateCandidate, DeterministicPerSeed) {
  TaskConfig task;
  const auto a = evaluate_candidate({0.5, 0.9}, task, 40, 11);
  const auto b = evaluate_candidate({0.5, 0.9}, task, 40, 11);
  EXPECT_EQ(a.traces, b.traces);
  EXPECT_EQ(a.fitness, b.fitness);
  EXPECT_EQ(a.fitness, fitness(a.traces, 40));
}

TEST(EvaluateCandidate, TunedPairBeatsTinyStepSize) {
  TaskConfig task;
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double good = evaluate_candidate({0.74, 0.97}, task, 200, seed).fitness;
    const double bad = evaluate_candidate({0.01, 0.97}, task, 200, seed).fitness;
    wins += good > bad;
  }
  EXPECT_GE(wins, 8);
}

TEST(TuningObjective, NegatesFitnessAndAveragesRepeats) {
  TaskConfig task;
  const std::vector<double> x{0.6, 0.8};
  const TuningObjective one{task, 24, 1};
  EXPECT_EQ(one(x, 5), -evaluate_candidate({0.6, 0.8}, task, 24, 5).fitness);
  const TuningObjective three{task, 24, 3};
  double sum = 0.0;
  for (std::size_t r = 0; r < 3; ++r)
    sum += evaluate_candidate({0.6, 0.8}, task, 24, derive_seed(5, {stream::repeat, r})).fitness;
  EXPECT_DOUBLE_EQ(three(x, 5), -sum / 3.0);
}

TEST(Tune, SingleRunWithoutIterations) {
  Protocol p = tiny_protocol();
  p.n_runs = 1;
  p.max_iter = 0;
  OptimizerConfig cfg;
  const auto r = tune(cfg, TaskConfig{}, p, 3);
  EXPECT_EQ(r.run_best_fitness.size(), 1u);
  EXPECT_EQ(r.evaluations, p.population);
  ASSERT_EQ(r.convergence.size(), 1u);
  EXPECT_EQ(r.convergence[0].size(), 1u);
  EXPECT_EQ(r.reward_curve.size(), p.episodes);
  EXPECT_TRUE(r.best_hp.valid());
}

TEST(Tune, BestIsMaxOverRunsAndCurvesIncrease) {
  const Protocol p = tiny_protocol();
  for (auto alg : compared_algorithms) {
    OptimizerConfig cfg;
    cfg.algorithm = alg;
    const auto r = tune(cfg, TaskConfig{}, p, 17);
    ASSERT_EQ(r.run_best_fitness.size(), p.n_runs);
    EXPECT_EQ(r.best_fitness, *std::max_element(r.run_best_fitness.begin(), r.run_best_fitness.end()));
    for (const auto& curve : r.convergence) {
      for (std::size_t k = 1; k < curve.size(); ++k) EXPECT_GE(curve[k], curve[k - 1]);
      EXPECT_EQ(curve.back(), *std::max_element(curve.begin(), curve.end()));
    }
    EXPECT_EQ(r.evaluations, p.n_runs * p.population * (p.max_iter + 1)) << display_name(alg);
  }
}

// The reported best fitness is a value some evaluation actually returned
// (with positive sign), and best_hp reproduces it.
TEST(Tune, BestFitnessMatchesItsHyperparameters) {
  const Protocol p = tiny_protocol();
  const TaskConfig task;
  const auto r = tune(OptimizerConfig{}, task, p, 29);
  bool found = false;
  for (std::size_t run = 0; run < p.n_runs && !found; ++run)
    for (std::size_t it = 0; it <= p.max_iter && !found; ++it)
      for (std::size_t a = 0; a < p.population && !found; ++a) {
        const auto seed = eval_seed(derive_seed(29, {stream::run, run}), it, a);
        found = evaluate_candidate(r.best_hp, task, p.episodes, seed).fitness == r.best_fitness;
      }
  EXPECT_TRUE(found);
}

TEST(Tune, Reproducible) {
  const Protocol p = tiny_protocol();
  const auto a = tune(OptimizerConfig{}, TaskConfig{}, p, 4);
  const auto b = tune(OptimizerConfig{}, TaskConfig{}, p, 4, 3);
  EXPECT_EQ(a.best_hp.alpha, b.best_hp.alpha);
  EXPECT_EQ(a.best_hp.gamma, b.best_hp.gamma);
  EXPECT_EQ(a.convergence, b.convergence);
  EXPECT_EQ(a.reward_curve, b.reward_curve);
}

TEST(Tune, CartPoleRuns) {
  TaskConfig task;
  task.task = Task::CartPole;
  const auto r = tune(OptimizerConfig{}, task, tiny_protocol(), 2);
  EXPECT_EQ(r.reward_curve.size(), 20u);
  for (double v : r.reward_curve) {
    EXPECT_GE(v, 1.0);
    EXPECT_LE(v, 500.0);
  }
}

TEST(Tune, RejectsInvalidProtocol) {
  Protocol p = tiny_protocol();
  p.episodes = 3;
  EXPECT_THROW(tune(OptimizerConfig{}, TaskConfig{}, p, 0), std::invalid_argument);
  p = tiny_protocol();
  p.population = 0;
  EXPECT_THROW(tune(OptimizerConfig{}, TaskConfig{}, p, 0), std::invalid_argument);
}

TEST(Tune, AllRunsFailingIsAnError) {
  TaskConfig task;
  task.map = {"SH", "HG"};
  task.frozenlake_step_cap = 0;  // every environment construction fails
  EXPECT_THROW(tune(OptimizerConfig{}, task, tiny_protocol(), 0), std::runtime_error);
}
