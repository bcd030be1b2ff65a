#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace toploc {

// Deterministic sampling helpers on top of std::mt19937_64. The distribution
// classes in <random> are implementation-defined, so every sampler that feeds
// reproducible output (index builds, synthetic workloads) goes through these.

// Uniform double in [0, 1) with 53 bits of precision.
inline double uniform_unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n).
inline std::size_t uniform_index(std::mt19937_64& gen, std::size_t n) {
  auto i = static_cast<std::size_t>(uniform_unit(gen) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

// Standard normal via Box-Muller. Consumes two engine values per sample.
inline double gaussian(std::mt19937_64& gen) {
  double u1 = uniform_unit(gen);
  double u2 = uniform_unit(gen);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace toploc
