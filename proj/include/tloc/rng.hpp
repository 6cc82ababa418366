#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tloc {

// splitmix64 step, used to derive independent stream seeds from a base seed
// plus structural indices (epoch, batch, sample).  Keeps every stochastic
// choice a pure function of the run seed.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ b);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix64(a, b) ^ c);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  // 53-bit mantissa draw; avoids distribution-object state surprises.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline int uniform_int(Rng& rng, int lo, int hi) {  // inclusive bounds
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(rng() % span);
}

inline double normal(Rng& rng) {
  // Box-Muller, one value per call (the discarded half keeps the code short;
  // generation here is nowhere near a bottleneck).
  double u1 = uniform(rng);
  while (u1 <= 0.0) u1 = uniform(rng);
  const double u2 = uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

}  // namespace tloc
