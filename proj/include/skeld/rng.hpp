#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace skeld {

// Stateless counter-based generator: a 64-bit avalanche mix of the key
// tuple gives bit-reproducible streams that can be sampled in any order,
// which is what the replica-parallel ensemble runner and common-random-
// number reuse across noise intensities rely on.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double counter_uniform(std::uint64_t seed, std::uint64_t replica,
                              std::uint64_t step, std::uint64_t k,
                              std::uint64_t lane) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ mix64(replica + 0x1000000001ULL));
  h = mix64(h ^ mix64(step + 0x2000000002ULL));
  h = mix64(h ^ mix64(k + 0x3000000003ULL));
  h = mix64(h ^ mix64(lane + 0x4000000004ULL));
  // Strictly inside (0, 1) so Box-Muller never sees log(0).
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

// One N(0, dt) increment for Brownian mode k at macro step `step`.
inline double normal_increment(std::uint64_t seed, std::uint64_t replica,
                               std::uint64_t step, std::uint64_t k,
                               double dt) {
  const double u1 = counter_uniform(seed, replica, step, k, 0);
  const double u2 = counter_uniform(seed, replica, step, k, 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2) *
         std::sqrt(dt);
}

}  // namespace skeld
