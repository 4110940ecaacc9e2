#pragma once

#include "qmod/core.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace qmod {

using Rng = std::mt19937_64;

/// Independent deterministic stream `stream` derived from a base seed.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

inline Vec random_direction(int n, Rng& rng) {
  std::normal_distribution<double> normal;
  Vec u(n);
  do {
    for (int i = 0; i < n; ++i) u(i) = normal(rng);
  } while (u.norm() == 0.0);
  return u.normalized();
}

/// Uniform (Lebesgue) point in the Euclidean ball B(0, radius).
inline Vec uniform_in_ball(int n, double radius, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return radius * std::pow(unif(rng), 1.0 / n) * random_direction(n, rng);
}

/// Random orthogonal matrix (QR of a Gaussian matrix with sign fix).
inline Mat random_orthogonal(int n, Rng& rng) {
  std::normal_distribution<double> normal;
  Mat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

/// Deterministic, roughly uniform directions on S^{n-1}: equally spaced
/// angles for n = 2, a Fibonacci spiral for n = 3, seeded random otherwise.
std::vector<Vec> low_discrepancy_directions(int n, std::size_t count, std::uint64_t seed = 1);

}  // namespace qmod
