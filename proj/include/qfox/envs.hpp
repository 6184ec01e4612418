#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qfox/random.hpp"

namespace qfox {

struct Transition {
  std::size_t next_state = 0;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;

  bool done() const noexcept { return terminated || truncated; }
};

// Episodic environment with discrete states and actions.
template <typename E>
concept EpisodicEnv = requires(E env, const E cenv, Rng& rng, std::size_t a) {
  { env.reset(rng) } -> std::convertible_to<std::size_t>;
  { env.step(a, rng) } -> std::same_as<Transition>;
  { cenv.state_count() } -> std::convertible_to<std::size_t>;
  { cenv.action_count() } -> std::convertible_to<std::size_t>;
  { cenv.step_cap() } -> std::convertible_to<std::size_t>;
};

// ---------------------------------------------------------------------------
// FrozenLake

enum class Cell : char { Start = 'S', Frozen = 'F', Hole = 'H', Goal = 'G' };

enum class Move : std::size_t { Left = 0, Down = 1, Right = 2, Up = 3 };

class FrozenLakeEnv {
 public:
  static constexpr std::size_t default_step_cap = 200;

  static std::vector<std::string> default_map() { return {"SFFF", "FHFH", "FFFH", "HFFG"}; }

  explicit FrozenLakeEnv(std::vector<std::string> rows = default_map(), bool slippery = false,
                         std::size_t step_cap = default_step_cap)
      : slippery_(slippery), step_cap_(step_cap) {
    if (rows.empty() || rows.front().empty())
      throw std::invalid_argument("FrozenLake map must be non-empty");
    if (step_cap == 0) throw std::invalid_argument("FrozenLake step cap must be positive");
    rows_ = rows.size();
    cols_ = rows.front().size();
    std::size_t starts = 0, goals = 0;
    for (const auto& row : rows) {
      if (row.size() != cols_) throw std::invalid_argument("FrozenLake map rows must have equal length");
      for (char c : row) {
        switch (c) {
          case 'S': ++starts; break;
          case 'G': ++goals; break;
          case 'F':
          case 'H': break;
          default: throw std::invalid_argument(std::string("unknown FrozenLake cell '") + c + "'");
        }
        cells_.push_back(static_cast<Cell>(c));
      }
    }
    if (starts != 1) throw std::invalid_argument("FrozenLake map needs exactly one start cell");
    if (goals < 1) throw std::invalid_argument("FrozenLake map needs at least one goal cell");
    start_ = static_cast<std::size_t>(std::find(cells_.begin(), cells_.end(), Cell::Start) - cells_.begin());
    pos_ = start_;
  }

  std::size_t state_count() const noexcept { return rows_ * cols_; }
  std::size_t action_count() const noexcept { return 4; }
  std::size_t step_cap() const noexcept { return step_cap_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool slippery() const noexcept { return slippery_; }
  std::size_t position() const noexcept { return pos_; }
  Cell cell(std::size_t s) const { return cells_.at(s); }
  // Direction actually taken by the last step (differs from the action
  // only on slippery ice).
  Move last_move() const noexcept { return last_move_; }

  std::size_t reset(Rng&) {
    pos_ = start_;
    steps_ = 0;
    done_ = false;
    return pos_;
  }

  Transition step(std::size_t action, Rng& rng) {
    if (action >= action_count()) throw std::out_of_range("FrozenLake action out of range");
    if (done_) throw std::logic_error("FrozenLake step called on a finished episode");

    std::size_t dir = action;
    if (slippery_) {
      // {a-1, a, a+1} mod 4, each with probability 1/3.
      dir = (action + 3 + uniform_index(rng, 3)) % 4;
    }
    last_move_ = static_cast<Move>(dir);
    pos_ = neighbour(pos_, last_move_);
    ++steps_;

    Transition t;
    t.next_state = pos_;
    const Cell c = cells_[pos_];
    t.reward = c == Cell::Goal ? 1.0 : 0.0;
    t.terminated = c == Cell::Goal || c == Cell::Hole;
    t.truncated = !t.terminated && steps_ >= step_cap_;
    done_ = t.done();
    return t;
  }

  // Cell reached from s by moving in direction m; edges clamp.
  std::size_t neighbour(std::size_t s, Move m) const noexcept {
    std::size_t r = s / cols_, c = s % cols_;
    switch (m) {
      case Move::Left: c = c > 0 ? c - 1 : c; break;
      case Move::Down: r = std::min(r + 1, rows_ - 1); break;
      case Move::Right: c = std::min(c + 1, cols_ - 1); break;
      case Move::Up: r = r > 0 ? r - 1 : r; break;
    }
    return r * cols_ + c;
  }

 private:
  std::vector<Cell> cells_;
  std::size_t rows_ = 0, cols_ = 0;
  std::size_t start_ = 0;
  bool slippery_ = false;
  std::size_t step_cap_ = default_step_cap;
  std::size_t pos_ = 0;
  std::size_t steps_ = 0;
  bool done_ = false;
  Move last_move_ = Move::Left;
};

// ---------------------------------------------------------------------------
// CartPole

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct Discretizer {
  std::array<std::size_t, 4> bins{6, 6, 12, 12};
  std::array<Interval, 4> bounds{{{-2.4, 2.4}, {-3.0, 3.0}, {-0.2095, 0.2095}, {-3.5, 3.5}}};

  std::size_t size() const noexcept {
    std::size_t n = 1;
    for (auto b : bins) n *= b;
    return n;
  }

  void validate() const {
    for (std::size_t d = 0; d < 4; ++d) {
      if (bins[d] < 1) throw std::invalid_argument("discretizer bins must all be >= 1");
      if (!(bounds[d].lo < bounds[d].hi) || !std::isfinite(bounds[d].lo) || !std::isfinite(bounds[d].hi))
        throw std::invalid_argument("discretizer bounds must be finite with lo < hi");
    }
  }

  std::size_t bucket(std::size_t d, double v) const noexcept {
    const auto [lo, hi] = bounds[d];
    const auto n = bins[d];
    if (!(v > lo)) return 0;  // also maps NaN to the lowest bucket
    if (v >= hi) return n - 1;
    const auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(n));
    return std::min(b, n - 1);
  }

  // Mixed-radix code of the per-dimension buckets, first dimension most
  // significant.
  std::size_t operator()(std::span<const double, 4> obs) const noexcept {
    std::size_t index = 0;
    for (std::size_t d = 0; d < 4; ++d) index = index * bins[d] + bucket(d, obs[d]);
    return index;
  }
};

inline std::size_t discretize(std::span<const double, 4> obs, const Discretizer& disc) { return disc(obs); }

struct CartPoleState {
  double x = 0.0;
  double x_dot = 0.0;
  double theta = 0.0;
  double theta_dot = 0.0;

  std::array<double, 4> as_array() const noexcept { return {x, x_dot, theta, theta_dot}; }
};

class CartPoleEnv {
 public:
  static constexpr std::size_t default_step_cap = 500;

  static constexpr double gravity = 9.8;
  static constexpr double cart_mass = 1.0;
  static constexpr double pole_mass = 0.1;
  static constexpr double total_mass = cart_mass + pole_mass;
  static constexpr double half_length = 0.5;
  static constexpr double pole_mass_length = pole_mass * half_length;
  static constexpr double force_mag = 10.0;
  static constexpr double tau = 0.02;
  static constexpr double x_threshold = 2.4;
  static constexpr double theta_threshold = 12.0 * std::numbers::pi / 180.0;

  explicit CartPoleEnv(Discretizer disc = {}, std::size_t step_cap = default_step_cap)
      : disc_(disc), step_cap_(step_cap) {
    disc_.validate();
    if (step_cap == 0) throw std::invalid_argument("CartPole step cap must be positive");
  }

  std::size_t state_count() const noexcept { return disc_.size(); }
  std::size_t action_count() const noexcept { return 2; }
  std::size_t step_cap() const noexcept { return step_cap_; }
  const Discretizer& discretizer() const noexcept { return disc_; }
  const CartPoleState& physical_state() const noexcept { return s_; }

  std::size_t reset(Rng& rng) {
    s_.x = uniform(rng, -0.05, 0.05);
    s_.x_dot = uniform(rng, -0.05, 0.05);
    s_.theta = uniform(rng, -0.05, 0.05);
    s_.theta_dot = uniform(rng, -0.05, 0.05);
    steps_ = 0;
    done_ = false;
    return observe();
  }

  // Places the cart in an arbitrary physical state and starts a new episode
  // from it.
  std::size_t reset_to(const CartPoleState& s) {
    s_ = s;
    steps_ = 0;
    done_ = false;
    return observe();
  }

  Transition step(std::size_t action, Rng&) {
    if (action >= action_count()) throw std::out_of_range("CartPole action out of range");
    if (done_) throw std::logic_error("CartPole step called on a finished episode");

    const double force = action == 1 ? force_mag : -force_mag;
    const double cos_t = std::cos(s_.theta);
    const double sin_t = std::sin(s_.theta);
    const double temp = (force + pole_mass_length * s_.theta_dot * s_.theta_dot * sin_t) / total_mass;
    const double theta_acc = (gravity * sin_t - cos_t * temp) /
                             (half_length * (4.0 / 3.0 - pole_mass * cos_t * cos_t / total_mass));
    const double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;

    s_.x += tau * s_.x_dot;
    s_.x_dot += tau * x_acc;
    s_.theta += tau * s_.theta_dot;
    s_.theta_dot += tau * theta_acc;
    ++steps_;

    Transition t;
    t.next_state = observe();
    t.reward = 1.0;
    t.terminated = out_of_bounds(s_);
    t.truncated = !t.terminated && steps_ >= step_cap_;
    done_ = t.done();
    return t;
  }

  static bool out_of_bounds(const CartPoleState& s) noexcept {
    return std::abs(s.x) > x_threshold || std::abs(s.theta) > theta_threshold;
  }

 private:
  std::size_t observe() const noexcept {
    const auto obs = s_.as_array();
    return disc_(std::span<const double, 4>{obs});
  }

  Discretizer disc_;
  std::size_t step_cap_ = default_step_cap;
  CartPoleState s_;
  std::size_t steps_ = 0;
  bool done_ = false;
};

static_assert(EpisodicEnv<FrozenLakeEnv>);
static_assert(EpisodicEnv<CartPoleEnv>);

}  // namespace qfox
