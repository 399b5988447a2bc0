#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace hamcg {

// Counter-based normal variates: the value depends only on
// (seed, stream, step, lane), never on call order or thread schedule.
inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t step,
                                  std::uint64_t lane) noexcept {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ stream);
  h = splitmix64(h ^ step);
  return splitmix64(h ^ lane);
}

/// Uniform in (0,1), never exactly 0 or 1.
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t step,
                              std::uint64_t lane) noexcept {
  return (static_cast<double>(counter_hash(seed, stream, step, lane) >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two independent lanes.
inline double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t step,
                             std::uint64_t lane) noexcept {
  const double u1 = counter_uniform(seed, stream, step, 2 * lane);
  const double u2 = counter_uniform(seed, stream, step, 2 * lane + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace hamcg
