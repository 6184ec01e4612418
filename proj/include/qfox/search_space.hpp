#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "qfox/random.hpp"

namespace qfox {

// Axis-aligned search box.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const noexcept { return lower.size(); }

  void validate() const {
    if (lower.empty() || lower.size() != upper.size())
      throw std::invalid_argument("search box must be non-empty with matching bound sizes");
    for (std::size_t d = 0; d < lower.size(); ++d) {
      if (!std::isfinite(lower[d]) || !std::isfinite(upper[d]) || !(lower[d] < upper[d]))
        throw std::invalid_argument("search box bound " + std::to_string(d) + " must be finite with low < high");
    }
  }

  double width(std::size_t d) const { return upper[d] - lower[d]; }

  bool contains(std::span<const double> x) const {
    if (x.size() != dim()) return false;
    for (std::size_t d = 0; d < dim(); ++d)
      if (!(x[d] >= lower[d] && x[d] <= upper[d])) return false;
    return true;
  }

  // NaN coordinates are sent to the lower bound.
  void clamp(std::span<double> x) const {
    for (std::size_t d = 0; d < dim(); ++d)
      x[d] = std::isnan(x[d]) ? lower[d] : std::clamp(x[d], lower[d], upper[d]);
  }

  std::vector<double> sample(Rng& rng) const {
    std::vector<double> x(dim());
    for (std::size_t d = 0; d < dim(); ++d) x[d] = uniform(rng, lower[d], upper[d]);
    return x;
  }
};

struct Candidate {
  std::vector<double> position;
  double fitness = std::numeric_limits<double>::infinity();  // lower is better
};

struct OptimizeResult {
  Candidate best;
  std::vector<double> history;  // best-so-far after initialization and each iteration
  std::size_t evaluations = 0;
};

// Options shared by every population optimizer.
struct SearchOptions {
  std::size_t population = 30;
  std::size_t max_iter = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const {
    if (population < 1) throw std::invalid_argument("population size must be >= 1");
    if (threads < 1) throw std::invalid_argument("thread count must be >= 1");
  }
};

// Thrown when an objective evaluation fails; carries the agent context.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(std::size_t iteration, std::size_t agent, const std::string& what)
      : std::runtime_error("objective failed at iteration " + std::to_string(iteration) + ", agent " +
                           std::to_string(agent) + ": " + what),
        iteration_(iteration),
        agent_(agent) {}

  std::size_t iteration() const noexcept { return iteration_; }
  std::size_t agent() const noexcept { return agent_; }

 private:
  std::size_t iteration_;
  std::size_t agent_;
};

// Objectives are called either as f(x) or as f(x, seed); the seed is
// derived from (optimizer seed, iteration, agent) so that stochastic
// objectives see the same noise stream under every optimizer.
template <typename F>
concept SeededObjective = std::is_invocable_r_v<double, F&, std::span<const double>, std::uint64_t>;

template <typename F>
concept PlainObjective = std::is_invocable_r_v<double, F&, std::span<const double>>;

template <typename F>
concept Objective = SeededObjective<F> || PlainObjective<F>;

inline std::uint64_t eval_seed(std::uint64_t seed, std::size_t iteration, std::size_t agent) {
  return derive_seed(seed, {stream::eval, iteration, agent});
}

template <Objective F>
double evaluate(F& f, std::span<const double> x, std::uint64_t seed, std::size_t iteration, std::size_t agent) {
  try {
    if constexpr (SeededObjective<F>)
      return static_cast<double>(f(x, eval_seed(seed, iteration, agent)));
    else
      return static_cast<double>(f(x));
  } catch (const EvaluationError&) {
    throw;
  } catch (const std::exception& e) {
    throw EvaluationError(iteration, agent, e.what());
  }
}

namespace detail {

// Strictly-lower update of the best-so-far; ties keep the incumbent.
inline bool improve(Candidate& best, const Candidate& c) {
  if (c.fitness < best.fitness) {
    best = c;
    return true;
  }
  return false;
}

inline const Candidate& best_of(std::span<const Candidate> pop) {
  return *std::min_element(pop.begin(), pop.end(),
                           [](const Candidate& a, const Candidate& b) { return a.fitness < b.fitness; });
}

}  // namespace detail

}  // namespace qfox
