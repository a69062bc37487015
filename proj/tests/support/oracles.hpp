// Test-only reference computations, kept independent of the library's
// algorithms.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "iseg/core.hpp"

namespace iseg::oracle {

/// Minimum over all injective assignments of size min(n, m), by enumerating
/// permutations of the longer side.
inline double brute_force_assignment(const std::vector<double>& cost, std::size_t n, std::size_t m) {
  const bool rows_short = n <= m;
  const std::size_t k = rows_short ? n : m;
  const std::size_t big = rows_short ? m : n;
  std::vector<std::size_t> perm(big);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      c += rows_short ? cost[i * m + perm[i]] : cost[perm[i] * m + i];
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Central difference of a scalar function.
inline double central_difference(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline ProbMap random_prob(Rng& rng, std::size_t h, std::size_t w, double lo = 0.0, double hi = 1.0) {
  std::vector<double> v(h * w);
  for (double& x : v) x = rng.uniform(lo, hi);
  return ProbMap(h, w, std::move(v));
}

inline BinaryMask random_mask(Rng& rng, std::size_t h, std::size_t w, double p_one = 0.5) {
  std::vector<std::uint8_t> v(h * w);
  for (auto& x : v) x = rng.uniform() < p_one ? 1 : 0;
  return BinaryMask(h, w, std::move(v));
}

}  // namespace iseg::oracle
