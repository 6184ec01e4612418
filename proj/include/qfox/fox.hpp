#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "qfox/parallel.hpp"
#include "qfox/random.hpp"
#include "qfox/search_space.hpp"

namespace qfox::fox {

struct Params {
  double c1 = 0.180;
  double c2 = 0.820;
  double jump_threshold = 0.18;  // p > threshold selects c1
  double exploit_prob = 0.5;     // r >= 1 - exploit_prob exploits
  double gravity = 9.81;
  double time_floor = 1e-12;     // guards the division by T
};

// Coefficient controlling the exploration step; decays linearly from 2 at
// the first iteration to 0 at the last.
inline double exploration_coefficient(std::size_t iter, std::size_t max_iter) {
  if (max_iter == 0) return 0.0;
  return 2.0 * (1.0 - static_cast<double>(iter) / static_cast<double>(max_iter));
}

// Quantities of one exploitation move, exposed for inspection.
struct Exploitation {
  std::vector<double> sound_distance;  // DSF
  std::vector<double> prey_distance;   // DFP
  double mean_time = 0.0;              // tt, average of the sampled times
  double jump = 0.0;
  double coefficient = 0.0;            // c1 or c2
  std::vector<double> position;
};

// Exploitation with caller-provided per-dimension sound travel times and
// jump-direction draw p.
inline Exploitation exploit(std::span<const double> best, std::span<const double> times, double p,
                            const Params& prm = {}) {
  if (best.size() != times.size()) throw std::invalid_argument("time vector must match dimension");
  const std::size_t dim = best.size();
  Exploitation e;
  e.sound_distance.resize(dim);
  e.prey_distance.resize(dim);
  e.position.resize(dim);
  double t_sum = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double t = std::max(times[d], prm.time_floor);
    const double speed = best[d] / t;
    e.sound_distance[d] = speed * t;
    e.prey_distance[d] = e.sound_distance[d] * 0.5;
    t_sum += times[d];
  }
  e.mean_time = t_sum / static_cast<double>(dim);
  e.jump = 0.5 * prm.gravity * e.mean_time * e.mean_time;
  e.coefficient = p > prm.jump_threshold ? prm.c1 : prm.c2;
  for (std::size_t d = 0; d < dim; ++d) e.position[d] = e.prey_distance[d] * e.jump * e.coefficient;
  return e;
}

inline std::vector<double> explore(std::span<const double> best, std::span<const double> walk, double min_tt,
                                   std::size_t iter, std::size_t max_iter) {
  const double a = exploration_coefficient(iter, max_iter);
  std::vector<double> x(best.size());
  for (std::size_t d = 0; d < best.size(); ++d) x[d] = best[d] * walk[d] * min_tt * a;
  return x;
}

struct Move {
  std::vector<double> position;
  bool exploited = false;
  double mean_time = 0.0;  // only meaningful when exploited
};

namespace detail {

inline bool draws_exploitation(Rng& rng, const Params& prm) { return uniform01(rng) >= 1.0 - prm.exploit_prob; }

inline Move exploit_draw(std::span<const double> best, Rng& rng, const Params& prm) {
  std::vector<double> times(best.size());
  for (auto& t : times) t = uniform01(rng);
  const double p = uniform01(rng);
  auto e = exploit(best, times, p, prm);
  return {std::move(e.position), true, e.mean_time};
}

inline Move explore_draw(std::span<const double> best, std::size_t iter, std::size_t max_iter, double min_tt,
                         Rng& rng) {
  std::vector<double> walk(best.size());
  for (auto& w : walk) w = uniform01(rng);
  return {explore(best, walk, min_tt, iter, max_iter), false, 0.0};
}

}  // namespace detail

// One unclamped FOX move. Draw order on rng: branch r, then either the T
// vector followed by p (exploitation) or the random walk vector
// (exploration).
inline Move fox_move(std::span<const double> best, std::size_t iter, std::size_t max_iter, double min_tt, Rng& rng,
                     const Params& prm = {}) {
  if (detail::draws_exploitation(rng, prm)) return detail::exploit_draw(best, rng, prm);
  if (!std::isfinite(min_tt)) throw std::invalid_argument("exploration requires a finite min_tt");
  return detail::explore_draw(best, iter, max_iter, min_tt, rng);
}

struct State {
  Box box;
  SearchOptions options;
  Params params;
  std::vector<Candidate> population;
  Candidate best;
  double min_tt = std::numeric_limits<double>::infinity();
  std::size_t iter = 0;
  std::size_t evaluations = 0;
};

inline State init(const Box& box, const SearchOptions& opts, const Params& prm = {}) {
  box.validate();
  opts.validate();
  State st{box, opts, prm, {}, {}, std::numeric_limits<double>::infinity(), 0, 0};
  Rng rng = make_rng(derive_seed(opts.seed, {stream::init}));
  st.population.resize(opts.population);
  for (auto& c : st.population) c.position = box.sample(rng);
  st.best.position = st.population.front().position;
  return st;
}

namespace detail {

template <Objective F>
void evaluate_population(State& st, F& f, std::size_t eval_iter) {
  parallel_for(st.population.size(), st.options.threads, [&](std::size_t i) {
    st.population[i].fitness = evaluate(f, st.population[i].position, st.options.seed, eval_iter, i);
  });
  st.evaluations += st.population.size();
  for (const auto& c : st.population) qfox::detail::improve(st.best, c);
}

}  // namespace detail

// Scores the initial population; must precede the first step.
template <Objective F>
void evaluate_initial(State& st, F& f) {
  detail::evaluate_population(st, f, 0);
}

// Stand-in for min_tt when every agent has explored so far.
inline constexpr double unobserved_min_tt = 1.0;

// One FOX iteration. Exploitation moves are drawn first; this iteration's
// smallest mean time among exploiting agents then enters min_tt before the
// exploration moves are formed.
template <Objective F>
void step(State& st, F& f) {
  const std::size_t g = st.population.size();
  const auto best = st.best.position;
  std::vector<Rng> rngs;
  rngs.reserve(g);
  std::vector<char> exploits(g);
  for (std::size_t i = 0; i < g; ++i) {
    rngs.push_back(make_rng(derive_seed(st.options.seed, {stream::move, st.iter, i})));
    exploits[i] = detail::draws_exploitation(rngs[i], st.params);
  }

  double iter_min_tt = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g; ++i) {
    if (!exploits[i]) continue;
    auto m = detail::exploit_draw(best, rngs[i], st.params);
    iter_min_tt = std::min(iter_min_tt, m.mean_time);
    st.population[i].position = std::move(m.position);
  }
  st.min_tt = std::min(st.min_tt, iter_min_tt);

  const double min_tt = std::isfinite(st.min_tt) ? st.min_tt : unobserved_min_tt;
  for (std::size_t i = 0; i < g; ++i) {
    if (exploits[i]) continue;
    st.population[i].position = detail::explore_draw(best, st.iter, st.options.max_iter, min_tt, rngs[i]).position;
  }

  for (auto& c : st.population) st.box.clamp(c.position);
  ++st.iter;
  detail::evaluate_population(st, f, st.iter);
}

template <Objective F>
OptimizeResult optimize(F&& f, const Box& box, const SearchOptions& opts, const Params& prm = {}) {
  State st = init(box, opts, prm);
  evaluate_initial(st, f);
  OptimizeResult out;
  out.history.reserve(opts.max_iter + 1);
  out.history.push_back(st.best.fitness);
  for (std::size_t k = 0; k < opts.max_iter; ++k) {
    step(st, f);
    out.history.push_back(st.best.fitness);
  }
  out.best = st.best;
  out.evaluations = st.evaluations;
  return out;
}

}  // namespace qfox::fox
