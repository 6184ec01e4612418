#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace qfox {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and a tuple of
// coordinates (run, iteration, agent, ...). Order of coordinates matters.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> coords) noexcept {
  std::uint64_t h = mix64(base);
  for (auto c : coords) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

// Stream tags so that seeds derived for different purposes never collide.
namespace stream {
inline constexpr std::uint64_t init = 0x1001;
inline constexpr std::uint64_t move = 0x1002;
inline constexpr std::uint64_t eval = 0x1003;
inline constexpr std::uint64_t run = 0x1004;
inline constexpr std::uint64_t final_train = 0x1005;
inline constexpr std::uint64_t greedy_eval = 0x1006;
inline constexpr std::uint64_t repeat = 0x1007;
}  // namespace stream

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>{0.0, 1.0}(rng);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>{lo, hi}(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>{0, n - 1}(rng);
}

inline double normal(Rng& rng, double mean, double stddev) {
  return std::normal_distribution<double>{mean, stddev}(rng);
}

}  // namespace qfox
