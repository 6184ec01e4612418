#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "qfox/fox.hpp"

using namespace qfox;

namespace {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

const Box kSphereBox{{-5.0, -5.0}, {5.0, 5.0}};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST(FoxFormulas, UnitTimesGiveHalfBestAndFixedJump) {
  const std::vector<double> best{0.8, -0.4, 2.0};
  const std::vector<double> ones(3, 1.0);
  for (double p : {0.5, 0.1}) {
    const auto e = fox::exploit(best, ones, p);
    EXPECT_DOUBLE_EQ(e.jump, 4.905);
    EXPECT_EQ(e.mean_time, 1.0);
    const double c = p > 0.18 ? 0.180 : 0.820;
    EXPECT_EQ(e.coefficient, c);
    for (std::size_t d = 0; d < 3; ++d) {
      EXPECT_DOUBLE_EQ(e.sound_distance[d], best[d]);
      EXPECT_DOUBLE_EQ(e.prey_distance[d], best[d] / 2);
      EXPECT_DOUBLE_EQ(e.position[d], best[d] * 2.4525 * c);
    }
  }
}

TEST(FoxFormulas, ZeroBestStaysZeroUnderExploitation) {
  const std::vector<double> zero(4, 0.0);
  const std::vector<double> times{0.3, 0.9, 0.01, 0.5};
  for (double v : fox::exploit(zero, times, 0.7).position) EXPECT_EQ(v, 0.0);
}

TEST(FoxFormulas, TinyTimesAreGuarded) {
  const std::vector<double> best{1.0, 1.0};
  const std::vector<double> times{0.0, 1e-300};
  const auto e = fox::exploit(best, times, 0.5);
  for (double v : e.position) EXPECT_TRUE(std::isfinite(v));
  EXPECT_THROW(fox::exploit(best, std::vector<double>{1.0}, 0.5), std::invalid_argument);
}

TEST(FoxFormulas, ExplorationCoefficientDecays) {
  EXPECT_EQ(fox::exploration_coefficient(0, 100), 2.0);
  EXPECT_EQ(fox::exploration_coefficient(50, 100), 1.0);
  EXPECT_EQ(fox::exploration_coefficient(100, 100), 0.0);
  const std::vector<double> best{3.0, -2.0};
  const std::vector<double> walk{0.5, 0.25};
  for (double v : fox::explore(best, walk, 0.4, 100, 100)) EXPECT_EQ(v, 0.0);
  const auto x = fox::explore(best, walk, 0.4, 0, 100);
  EXPECT_DOUBLE_EQ(x[0], 3.0 * 0.5 * 0.4 * 2.0);
  EXPECT_DOUBLE_EQ(x[1], -2.0 * 0.25 * 0.4 * 2.0);
}

TEST(FoxMove, BranchFrequenciesAreBalanced) {
  const std::vector<double> best{1.0, 1.0};
  Rng rng(77);
  int exploit = 0;
  constexpr int n = 10000;
  for (int i = 0; i < n; ++i) exploit += fox::fox_move(best, 3, 10, 0.2, rng).exploited;
  EXPECT_NEAR(exploit / double(n), 0.5, 0.02);
}

TEST(FoxMove, ExplorationNeedsFiniteMinTime) {
  const std::vector<double> best{1.0};
  Rng rng(0);
  bool threw = false;
  for (int i = 0; i < 50 && !threw; ++i) {
    try {
      fox::fox_move(best, 0, 10, INFINITY, rng);
    } catch (const std::invalid_argument&) {
      threw = true;
    }
  }
  EXPECT_TRUE(threw);
}

TEST(FoxInit, PositionsInsideBoxAndReproducible) {
  const Box box{{0.01, 0.0}, {1.0, 1.0}};
  const auto a = fox::init(box, {30, 10, 5, 1});
  const auto b = fox::init(box, {30, 10, 5, 1});
  ASSERT_EQ(a.population.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_TRUE(box.contains(a.population[i].position));
    EXPECT_EQ(a.population[i].position, b.population[i].position);
  }
  EXPECT_TRUE(std::isinf(a.min_tt));
  EXPECT_EQ(fox::init(box, {1, 10, 5, 1}).population.size(), 1u);
  EXPECT_THROW(fox::init(Box{{1.0}, {0.0}}, {}), std::invalid_argument);
  EXPECT_THROW(fox::init(Box{}, {}), std::invalid_argument);
  EXPECT_THROW(fox::init(box, {0, 10, 5, 1}), std::invalid_argument);
}

TEST(FoxStep, TracksMinTimeAndClamps) {
  std::vector<std::vector<double>> seen;
  auto f = [&](std::span<const double> x) {
    seen.emplace_back(x.begin(), x.end());
    return sphere(x) + 1.0;
  };
  const Box box{{-1.0, 2.0}, {1.0, 3.0}};  // origin outside: exploitation always clamps
  auto st = fox::init(box, {12, 8, 3, 1});
  fox::evaluate_initial(st, f);
  double prev_min = st.min_tt;
  for (int k = 0; k < 8; ++k) {
    fox::step(st, f);
    EXPECT_LE(st.min_tt, prev_min);
    EXPECT_GE(st.min_tt, 0.0);
    prev_min = st.min_tt;
  }
  EXPECT_EQ(st.iter, 8u);
  EXPECT_EQ(st.evaluations, 12u * 9u);
  for (const auto& x : seen) EXPECT_TRUE(box.contains(x));
}

TEST(FoxOptimize, ConstantObjectiveNeverImproves) {
  auto f = [](std::span<const double>) { return 3.5; };
  const auto r = fox::optimize(f, kSphereBox, {10, 20, 1, 1});
  ASSERT_EQ(r.history.size(), 21u);
  for (double h : r.history) EXPECT_EQ(h, 3.5);
}

TEST(FoxOptimize, ZeroIterationsReturnsBestInitial) {
  const SearchOptions opts{15, 0, 9, 1};
  const auto st = fox::init(kSphereBox, opts);
  double best = INFINITY;
  for (const auto& c : st.population) best = std::min(best, sphere(c.position));
  const auto r = fox::optimize(sphere, kSphereBox, opts);
  EXPECT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.best.fitness, best);
  EXPECT_EQ(r.evaluations, 15u);
}

TEST(FoxOptimize, SphereConvergesAndIsMonotone) {
  std::vector<double> bests;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = fox::optimize(sphere, kSphereBox, {30, 100, seed, 1});
    ASSERT_EQ(r.history.size(), 101u);
    for (std::size_t k = 1; k < r.history.size(); ++k) ASSERT_LE(r.history[k], r.history[k - 1]);
    EXPECT_TRUE(kSphereBox.contains(r.best.position));
    EXPECT_EQ(r.best.fitness, sphere(r.best.position));
    bests.push_back(r.best.fitness);
  }
  EXPECT_LE(median(bests), 1e-2);
}

TEST(FoxOptimize, ThreadCountDoesNotChangeResults) {
  const auto a = fox::optimize(sphere, kSphereBox, {20, 30, 4, 1});
  const auto b = fox::optimize(sphere, kSphereBox, {20, 30, 4, 4});
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.best.position, b.best.position);
}

TEST(FoxOptimize, SeededObjectiveSeesDistinctStreams) {
  std::vector<std::uint64_t> seeds;
  auto f = [&](std::span<const double> x, std::uint64_t s) {
    seeds.push_back(s);
    return sphere(x);
  };
  fox::optimize(f, kSphereBox, {5, 3, 2, 1});
  std::sort(seeds.begin(), seeds.end());
  EXPECT_EQ(std::adjacent_find(seeds.begin(), seeds.end()), seeds.end());
  EXPECT_EQ(seeds.size(), 20u);
}

TEST(FoxOptimize, ObjectiveFailureCarriesAgentContext) {
  std::atomic<int> calls{0};
  auto f = [&](std::span<const double> x) {
    if (++calls == 13) throw std::runtime_error("boom");
    return sphere(x);
  };
  try {
    fox::optimize(f, kSphereBox, {6, 5, 0, 1});
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_EQ(e.iteration(), 2u);
    EXPECT_EQ(e.agent(), 0u);
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
  }
}
