#pragma once

// Hand-rolled generators for the property tests.

#include "qmod/core.hpp"
#include "qmod/modulus.hpp"
#include "qmod/sampling.hpp"

#include <queue>
#include <random>

namespace qmod::testing {

inline Vec ball_point(int n, double radius, Rng& rng) { return uniform_in_ball(n, radius, rng); }

inline double uniform(double a, double b, Rng& rng) { return std::uniform_real_distribution<double>(a, b)(rng); }

inline int uniform_int(int a, int b, Rng& rng) { return std::uniform_int_distribution<int>(a, b)(rng); }

inline Mat gaussian_matrix(int n, Rng& rng) {
  std::normal_distribution<double> normal;
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = normal(rng);
  return m;
}

// Hyperbolic distance through cosh h = 1 + 2|x-y|^2 / ((1-|x|^2)(1-|y|^2)).
inline double cosh_distance(const Vec& x, const Vec& y) {
  return std::acosh(1.0 + 2.0 * (x - y).squaredNorm() / ((1.0 - x.squaredNorm()) * (1.0 - y.squaredNorm())));
}

// Ahlfors' form of the ball automorphism sending a to 0.
inline Vec ahlfors_translation(const Vec& a, const Vec& x) {
  const double bracket = 1.0 - 2.0 * x.dot(a) + x.squaredNorm() * a.squaredNorm();
  return ((1.0 - a.squaredNorm()) * (x - a) - (x - a).squaredNorm() * a) / bracket;
}

// Grid search over the simplex in masses beta_i = mu_i alpha_i with steps of
// 1/units. The objective is separable and convex in beta, so handing out
// units one at a time to the cheapest marginal atom is optimal on the grid.
inline double greedy_grid_infimum(const DiscreteMeasureSpace& s, double q, int units) {
  const std::size_t k = s.mu.size();
  auto cost = [&](std::size_t i, int u) {
    const double beta = static_cast<double>(u) / units;
    return s.mu[i] * s.phi[i] * std::pow(beta / s.mu[i], q);
  };
  std::vector<int> alloc(k, 0);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (std::size_t i = 0; i < k; ++i) heap.push({cost(i, 1) - cost(i, 0), i});
  for (int step = 0; step < units; ++step) {
    const auto [delta, i] = heap.top();
    heap.pop();
    ++alloc[i];
    heap.push({cost(i, alloc[i] + 1) - cost(i, alloc[i]), i});
  }
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += cost(i, alloc[i]);
  return total;
}

}  // namespace qmod::testing
