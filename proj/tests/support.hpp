// Shared helpers for the test binaries.
#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace fhum::test {

/// SplitMix64 step; fixed sequence, identical on every platform.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// n values uniform in [-1, 1) from the SplitMix64 stream started at `seed`.
inline Eigen::VectorXd splitmix_vector(int n, std::uint64_t seed) {
  Eigen::VectorXd v(n);
  std::uint64_t s = seed;
  for (int i = 0; i < n; ++i) v(i) = 2.0 * static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53 - 1.0;
  return v;
}

}  // namespace fhum::test
