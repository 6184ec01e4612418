#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qfox/fox.hpp"
#include "qfox/parallel.hpp"
#include "qfox/random.hpp"
#include "qfox/search_space.hpp"

namespace qfox {

namespace detail {

template <Objective F>
void evaluate_all(std::span<Candidate> pop, F& f, const SearchOptions& opts, std::size_t iteration) {
  parallel_for(pop.size(), opts.threads, [&](std::size_t i) {
    pop[i].fitness = evaluate(f, pop[i].position, opts.seed, iteration, i);
  });
}

inline std::vector<Candidate> sample_population(const Box& box, const SearchOptions& opts) {
  Rng rng = make_rng(derive_seed(opts.seed, {stream::init}));
  std::vector<Candidate> pop(opts.population);
  for (auto& c : pop) c.position = box.sample(rng);
  return pop;
}

inline Rng agent_rng(const SearchOptions& opts, std::size_t iteration, std::size_t agent) {
  return make_rng(derive_seed(opts.seed, {stream::move, iteration, agent}));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Particle swarm, global-best topology.

namespace pso {

struct Params {
  double inertia = 0.7;
  double cognitive = 1.5;
  double social = 1.5;
  double velocity_clamp = 0.2;  // fraction of box width
};

template <Objective F>
OptimizeResult optimize(F&& f, const Box& box, const SearchOptions& opts, const Params& prm = {}) {
  box.validate();
  opts.validate();
  const std::size_t dim = box.dim();
  std::vector<double> vmax(dim);
  for (std::size_t d = 0; d < dim; ++d) vmax[d] = prm.velocity_clamp * box.width(d);

  auto pop = detail::sample_population(box, opts);
  std::vector<std::vector<double>> vel(pop.size(), std::vector<double>(dim));
  {
    Rng rng = make_rng(derive_seed(opts.seed, {stream::init, 1}));
    for (auto& v : vel)
      for (std::size_t d = 0; d < dim; ++d) v[d] = uniform(rng, -vmax[d], vmax[d]);
  }
  detail::evaluate_all(std::span{pop}, f, opts, 0);
  std::vector<Candidate> personal = pop;
  Candidate best{pop.front().position, std::numeric_limits<double>::infinity()};
  for (const auto& c : pop) detail::improve(best, c);

  OptimizeResult out;
  out.evaluations = pop.size();
  out.history.push_back(best.fitness);
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    for (std::size_t i = 0; i < pop.size(); ++i) {
      Rng rng = detail::agent_rng(opts, it, i);
      auto& x = pop[i].position;
      for (std::size_t d = 0; d < dim; ++d) {
        const double r1 = uniform01(rng), r2 = uniform01(rng);
        double v = prm.inertia * vel[i][d] + prm.cognitive * r1 * (personal[i].position[d] - x[d]) +
                   prm.social * r2 * (best.position[d] - x[d]);
        vel[i][d] = std::clamp(v, -vmax[d], vmax[d]);
        x[d] += vel[i][d];
      }
      box.clamp(x);
    }
    detail::evaluate_all(std::span{pop}, f, opts, it + 1);
    out.evaluations += pop.size();
    for (std::size_t i = 0; i < pop.size(); ++i) {
      detail::improve(personal[i], pop[i]);
      detail::improve(best, pop[i]);
    }
    out.history.push_back(best.fitness);
  }
  out.best = std::move(best);
  return out;
}

}  // namespace pso

// ---------------------------------------------------------------------------
// Real-coded genetic algorithm.

namespace ga {

struct Params {
  std::size_t tournament = 3;
  double crossover_rate = 0.9;
  double mutation_rate = 0.1;    // per gene
  double mutation_sigma = 0.1;   // fraction of box width
  std::size_t elites = 1;
};

template <Objective F>
OptimizeResult optimize(F&& f, const Box& box, const SearchOptions& opts, const Params& prm = {}) {
  box.validate();
  opts.validate();
  if (prm.tournament < 1) throw std::invalid_argument("tournament size must be >= 1");
  const std::size_t dim = box.dim();
  const std::size_t g = opts.population;

  auto pop = detail::sample_population(box, opts);
  detail::evaluate_all(std::span{pop}, f, opts, 0);
  Candidate best{pop.front().position, std::numeric_limits<double>::infinity()};
  for (const auto& c : pop) detail::improve(best, c);

  auto by_fitness = [](const Candidate& a, const Candidate& b) { return a.fitness < b.fitness; };

  OptimizeResult out;
  out.evaluations = g;
  out.history.push_back(best.fitness);
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    std::vector<Candidate> children(g);
    for (std::size_t i = 0; i < g; ++i) {
      Rng rng = detail::agent_rng(opts, it, i);
      auto pick = [&]() -> const Candidate& {
        const Candidate* winner = &pop[uniform_index(rng, g)];
        for (std::size_t k = 1; k < prm.tournament; ++k) {
          const Candidate& c = pop[uniform_index(rng, g)];
          if (c.fitness < winner->fitness) winner = &c;
        }
        return *winner;
      };
      const Candidate& a = pick();
      const Candidate& b = pick();
      auto& x = children[i].position;
      x = a.position;
      if (uniform01(rng) < prm.crossover_rate)
        for (std::size_t d = 0; d < dim; ++d)
          if (uniform01(rng) < 0.5) x[d] = b.position[d];
      for (std::size_t d = 0; d < dim; ++d)
        if (uniform01(rng) < prm.mutation_rate) x[d] += normal(rng, 0.0, prm.mutation_sigma * box.width(d));
      box.clamp(x);
    }
    detail::evaluate_all(std::span{children}, f, opts, it + 1);
    out.evaluations += g;

    // Elites from the previous generation replace the worst children
    // when they are better.
    std::sort(pop.begin(), pop.end(), by_fitness);
    std::stable_sort(children.begin(), children.end(), by_fitness);
    const std::size_t keep = std::min(prm.elites, g);
    for (std::size_t e = 0; e < keep; ++e) {
      Candidate& worst = children[g - 1 - e];
      if (pop[e].fitness < worst.fitness) worst = pop[e];
    }
    pop = std::move(children);
    for (const auto& c : pop) detail::improve(best, c);
    out.history.push_back(best.fitness);
  }
  out.best = std::move(best);
  return out;
}

}  // namespace ga

// ---------------------------------------------------------------------------
// Bat algorithm.

namespace ba {

struct Params {
  double freq_min = 0.0;
  double freq_max = 2.0;
  double loudness = 1.0;
  double pulse_rate = 0.5;
  double loudness_decay = 0.9;  // alpha
  double pulse_growth = 0.9;    // gamma
  double walk_scale = 0.1;      // local walk step as fraction of box width
};

template <Objective F>
OptimizeResult optimize(F&& f, const Box& box, const SearchOptions& opts, const Params& prm = {}) {
  box.validate();
  opts.validate();
  const std::size_t dim = box.dim();
  const std::size_t g = opts.population;

  auto pop = detail::sample_population(box, opts);
  std::vector<std::vector<double>> vel(g, std::vector<double>(dim, 0.0));
  std::vector<double> loud(g, prm.loudness);
  std::vector<double> pulse(g, prm.pulse_rate);
  detail::evaluate_all(std::span{pop}, f, opts, 0);
  Candidate best{pop.front().position, std::numeric_limits<double>::infinity()};
  for (const auto& c : pop) detail::improve(best, c);

  OptimizeResult out;
  out.evaluations = g;
  out.history.push_back(best.fitness);
  std::vector<Candidate> trial(g);
  std::vector<double> accept_draw(g);
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    double mean_loud = 0.0;
    for (double l : loud) mean_loud += l;
    mean_loud /= static_cast<double>(g);

    for (std::size_t i = 0; i < g; ++i) {
      Rng rng = detail::agent_rng(opts, it, i);
      const double freq = prm.freq_min + (prm.freq_max - prm.freq_min) * uniform01(rng);
      auto& x = trial[i].position;
      x.resize(dim);
      for (std::size_t d = 0; d < dim; ++d) {
        vel[i][d] += (pop[i].position[d] - best.position[d]) * freq;
        x[d] = pop[i].position[d] + vel[i][d];
      }
      if (uniform01(rng) > pulse[i])
        for (std::size_t d = 0; d < dim; ++d)
          x[d] = best.position[d] + uniform(rng, -1.0, 1.0) * mean_loud * prm.walk_scale * box.width(d);
      box.clamp(x);
      accept_draw[i] = uniform01(rng);
    }
    detail::evaluate_all(std::span{trial}, f, opts, it + 1);
    out.evaluations += g;

    const double t = static_cast<double>(it + 1);
    for (std::size_t i = 0; i < g; ++i) {
      if (accept_draw[i] < loud[i] && trial[i].fitness <= pop[i].fitness) {
        pop[i] = trial[i];
        loud[i] *= prm.loudness_decay;
        pulse[i] = prm.pulse_rate * (1.0 - std::exp(-prm.pulse_growth * t));
      }
      detail::improve(best, trial[i]);
    }
    out.history.push_back(best.fitness);
  }
  out.best = std::move(best);
  return out;
}

}  // namespace ba

// ---------------------------------------------------------------------------
// Uniform random search. Sample k uses the evaluation seed of
// (iteration k / batch, agent k % batch), matching the seeds a population
// optimizer with `batch` agents would hand to the same objective.

template <Objective F>
OptimizeResult random_search(F&& f, const Box& box, std::size_t n_samples, std::uint64_t seed,
                             std::size_t batch = 1, std::size_t threads = 1) {
  box.validate();
  if (n_samples < 1) throw std::invalid_argument("random search needs at least one sample");
  if (batch < 1) throw std::invalid_argument("random search batch must be >= 1");
  std::vector<Candidate> samples(n_samples);
  Rng rng = make_rng(derive_seed(seed, {stream::init}));
  for (auto& c : samples) c.position = box.sample(rng);
  parallel_for(n_samples, threads, [&](std::size_t k) {
    samples[k].fitness = evaluate(f, samples[k].position, seed, k / batch, k % batch);
  });

  OptimizeResult out;
  out.best = {samples.front().position, std::numeric_limits<double>::infinity()};
  out.history.reserve(n_samples);
  for (const auto& c : samples) {
    detail::improve(out.best, c);
    out.history.push_back(out.best.fitness);
  }
  out.evaluations = n_samples;
  return out;
}

// ---------------------------------------------------------------------------
// Uniform dispatch over every optimizer.

enum class Algorithm { Fox, Pso, Ga, Ba, Random, RandomSingle };

inline constexpr std::array<Algorithm, 5> compared_algorithms{Algorithm::Fox, Algorithm::Pso, Algorithm::Ga,
                                                              Algorithm::Ba, Algorithm::Random};

inline std::string_view display_name(Algorithm a) {
  switch (a) {
    case Algorithm::Fox: return "FOX";
    case Algorithm::Pso: return "PSO";
    case Algorithm::Ga: return "GA";
    case Algorithm::Ba: return "BA";
    case Algorithm::Random: return "Random";
    case Algorithm::RandomSingle: return "Random-1";
  }
  return "?";
}

inline std::string_view key_name(Algorithm a) {
  switch (a) {
    case Algorithm::Fox: return "fox";
    case Algorithm::Pso: return "pso";
    case Algorithm::Ga: return "ga";
    case Algorithm::Ba: return "ba";
    case Algorithm::Random: return "random";
    case Algorithm::RandomSingle: return "random1";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  for (auto a : {Algorithm::Fox, Algorithm::Pso, Algorithm::Ga, Algorithm::Ba, Algorithm::Random,
                 Algorithm::RandomSingle})
    if (key_name(a) == s) return a;
  return std::nullopt;
}

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::Fox;
  fox::Params fox;
  pso::Params pso;
  ga::Params ga;
  ba::Params ba;
};

// Runs the configured optimizer. Random spends the same budget as a
// population optimizer (population x (max_iter + 1) samples); RandomSingle
// draws one untuned point.
template <Objective F>
OptimizeResult run_optimizer(const OptimizerConfig& cfg, F&& f, const Box& box, const SearchOptions& opts) {
  switch (cfg.algorithm) {
    case Algorithm::Fox: return fox::optimize(f, box, opts, cfg.fox);
    case Algorithm::Pso: return pso::optimize(f, box, opts, cfg.pso);
    case Algorithm::Ga: return ga::optimize(f, box, opts, cfg.ga);
    case Algorithm::Ba: return ba::optimize(f, box, opts, cfg.ba);
    case Algorithm::Random:
      opts.validate();
      return random_search(f, box, opts.population * (opts.max_iter + 1), opts.seed, opts.population,
                           opts.threads);
    case Algorithm::RandomSingle: return random_search(f, box, 1, opts.seed, 1, opts.threads);
  }
  throw std::logic_error("unknown algorithm");
}

}  // namespace qfox
