#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfox/envs.hpp"
#include "qfox/random.hpp"

namespace qfox {

// Q-learning step size and discount factor.
struct Hyperparams {
  static constexpr double alpha_min = 0.01;
  static constexpr double alpha_max = 1.0;
  static constexpr double gamma_min = 0.0;
  static constexpr double gamma_max = 1.0;

  double alpha = 0.1;
  double gamma = 0.9;

  bool valid() const noexcept {
    return std::isfinite(alpha) && std::isfinite(gamma) && alpha >= alpha_min && alpha <= alpha_max &&
           gamma >= gamma_min && gamma <= gamma_max;
  }

  void validate() const {
    if (!valid())
      throw std::invalid_argument("hyperparameters out of range: alpha=" + std::to_string(alpha) +
                                  " gamma=" + std::to_string(gamma));
  }
};

// Dense row-major |S| x |A| action-value table.
class QTable {
 public:
  QTable() = default;
  QTable(std::size_t states, std::size_t actions, double initial = 0.0)
      : states_(states), actions_(actions), values_(states * actions, initial) {
    if (states == 0 || actions == 0) throw std::invalid_argument("QTable needs at least one state and action");
  }

  std::size_t state_count() const noexcept { return states_; }
  std::size_t action_count() const noexcept { return actions_; }

  double& operator()(std::size_t s, std::size_t a) { return values_[s * actions_ + a]; }
  double operator()(std::size_t s, std::size_t a) const { return values_[s * actions_ + a]; }

  std::span<const double> row(std::size_t s) const { return {values_.data() + s * actions_, actions_}; }
  std::span<double> row(std::size_t s) { return {values_.data() + s * actions_, actions_}; }
  std::span<const double> values() const noexcept { return values_; }

  double max_value(std::size_t s) const {
    auto r = row(s);
    return *std::max_element(r.begin(), r.end());
  }

  // Lowest index among maximal entries.
  std::size_t argmax(std::size_t s) const {
    auto r = row(s);
    return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::size_t states_ = 0;
  std::size_t actions_ = 0;
  std::vector<double> values_;
};

struct EpisodeTrace {
  double total_reward = 0.0;
  double td_error_mag = 0.0;  // mean |delta| over the episode's steps
  std::size_t steps = 0;

  friend bool operator==(const EpisodeTrace&, const EpisodeTrace&) = default;
};

// Multiplicative epsilon decay applied after every episode.
struct EpsilonSchedule {
  double start = 1.0;
  double decay = 0.98;
  double floor = 0.01;

  void validate() const {
    auto in01 = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    if (!in01(start) || !in01(decay) || !in01(floor))
      throw std::invalid_argument("epsilon schedule values must lie in [0, 1]");
  }

  double next(double epsilon) const { return std::max(floor, epsilon * decay); }

  double at(std::size_t episode) const {
    double eps = start;
    for (std::size_t k = 0; k < episode; ++k) eps = next(eps);
    return eps;
  }
};

// r + gamma * max_a' Q(s', a') - Q(s, a), with the bootstrap dropped on
// terminal transitions.
inline double td_error(const QTable& q, std::size_t s, std::size_t a, double r, std::size_t s_next,
                       bool terminated, double gamma) {
  const double bootstrap = terminated ? 0.0 : q.max_value(s_next);
  return r + gamma * bootstrap - q(s, a);
}

inline void update(QTable& q, std::size_t s, std::size_t a, double alpha, double delta) {
  q(s, a) += alpha * delta;
}

inline std::size_t select_action(const QTable& q, std::size_t s, double epsilon, Rng& rng) {
  if (uniform01(rng) < epsilon) return uniform_index(rng, q.action_count());
  return q.argmax(s);
}

inline std::vector<std::size_t> greedy_policy(const QTable& q) {
  std::vector<std::size_t> policy(q.state_count());
  for (std::size_t s = 0; s < policy.size(); ++s) policy[s] = q.argmax(s);
  return policy;
}

// Plays one epsilon-greedy episode, learning online.
template <EpisodicEnv Env>
EpisodeTrace run_episode(Env& env, QTable& q, const Hyperparams& hp, double epsilon, Rng& rng) {
  EpisodeTrace trace;
  double abs_delta_sum = 0.0;
  std::size_t s = env.reset(rng);
  for (;;) {
    const std::size_t a = select_action(q, s, epsilon, rng);
    const Transition t = env.step(a, rng);
    const double delta = td_error(q, s, a, t.reward, t.next_state, t.terminated, hp.gamma);
    update(q, s, a, hp.alpha, delta);
    trace.total_reward += t.reward;
    abs_delta_sum += std::abs(delta);
    ++trace.steps;
    s = t.next_state;
    if (t.done()) break;
  }
  trace.td_error_mag = abs_delta_sum / static_cast<double>(trace.steps);
  return trace;
}

struct TrainingRun {
  std::vector<EpisodeTrace> traces;
  QTable q;
};

// Initial action value of a fresh table. With rewards in [0, 1] per step a
// value of 1 is optimistic for sparse-reward tasks, so untried actions are
// preferred over tried ones that led nowhere.
inline constexpr double default_initial_q = 1.0;

template <EpisodicEnv Env>
TrainingRun train(Env& env, const Hyperparams& hp, std::size_t episodes, const EpsilonSchedule& schedule,
                  Rng& rng, double initial_q = default_initial_q) {
  hp.validate();
  schedule.validate();
  if (episodes < 4) throw std::invalid_argument("training needs at least 4 episodes");
  if (!std::isfinite(initial_q)) throw std::invalid_argument("initial Q value must be finite");

  TrainingRun run{{}, QTable{env.state_count(), env.action_count(), initial_q}};
  run.traces.reserve(episodes);
  double epsilon = schedule.start;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    run.traces.push_back(run_episode(env, run.q, hp, epsilon, rng));
    epsilon = schedule.next(epsilon);
  }
  return run;
}

// Mean total reward of the greedy policy over `episodes` fresh episodes.
template <EpisodicEnv Env>
double evaluate_greedy(Env& env, const QTable& q, std::size_t episodes, Rng& rng) {
  if (episodes == 0) throw std::invalid_argument("greedy evaluation needs at least one episode");
  double total = 0.0;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    std::size_t s = env.reset(rng);
    for (;;) {
      const Transition t = env.step(q.argmax(s), rng);
      total += t.reward;
      s = t.next_state;
      if (t.done()) break;
    }
  }
  return total / static_cast<double>(episodes);
}

}  // namespace qfox
