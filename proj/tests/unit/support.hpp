#pragma once

// Shared helpers for the unit tests.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <vector>

#include "fracvar/grid.hpp"

namespace testing {

inline double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

/// Smooth bump supported on (center - width, center + width).
inline double bump(double x, double center, double width) {
  const double y = (x - center) / width;
  return std::abs(y) < 1.0 ? std::exp(-1.0 / (1.0 - y * y)) : 0.0;
}

/// Uniform values in [-1, 1) from raw 64-bit draws (portable across libraries).
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : rng_(seed) {}
  double operator()() { return 2.0 * std::ldexp(static_cast<double>(rng_() >> 11), -53) - 1.0; }

 private:
  std::mt19937_64 rng_;
};

inline fracvar::GridFunction random_function(const fracvar::GridPtr& grid, Uniform& u, double lo, double hi) {
  fracvar::GridFunction f(grid);
  for (std::size_t i = 0; i < grid->node_count(); ++i) {
    const double x = grid->node(i);
    if (x > lo && x < hi) f[i] = u();
  }
  return f;
}

inline bool bit_equal(const fracvar::GridFunction& a, const fracvar::GridFunction& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  return true;
}

}  // namespace testing
