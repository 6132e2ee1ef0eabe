#pragma once

// Portable random helpers. The standard distributions are
// implementation-defined, so every draw that ends up in an output file goes
// through these functions on top of std::mt19937_64 instead.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

namespace dialogic::rnd {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for item `index` under `seed`.
inline Engine derive(std::uint64_t seed, std::uint64_t index) {
  return Engine(splitmix64(splitmix64(seed) ^ splitmix64(index + 1)));
}

// Uniform in [0, 1) from the top 53 bits.
inline double uniform01(Engine& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection, n > 0.
inline std::uint64_t uniform_index(Engine& g, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return x % n;
}

// Box-Muller; consumes two uniforms per call and discards the sine half.
inline double standard_normal(Engine& g) {
  double u1;
  do {
    u1 = uniform01(g);
  } while (u1 <= 0.0);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Lognormal with the given arithmetic mean and SD (not log-space params).
inline double lognormal_mean_sd(Engine& g, double mean, double sd) {
  if (sd <= 0.0) return mean;
  const double s2 = std::log1p((sd * sd) / (mean * mean));
  const double mu = std::log(mean) - 0.5 * s2;
  return std::exp(mu + std::sqrt(s2) * standard_normal(g));
}

// Index drawn proportionally to non-negative weights (not necessarily
// normalized). Zero-weight entries are never returned.
inline std::size_t weighted_index(Engine& g, std::span<const double> weights) {
  double total = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    total += weights[i];
    if (weights[i] > 0.0) last_positive = i;
  }
  double u = uniform01(g) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0 && u < weights[i]) return i;
    u -= weights[i];
  }
  return last_positive;
}

}  // namespace dialogic::rnd
