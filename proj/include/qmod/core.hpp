#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qmod {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when an argument lies outside the mathematical domain of an
/// operation (a point on or outside the unit sphere, r1 >= r2, q <= 1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when structured input fails a consistency check (non-orthogonal
/// rotation, eta violating its normalisation, malformed config, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative method stops without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Surface area of the unit sphere S^{n-1} in R^n.
inline double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// Euclidean radius in the ball model of a hyperbolic sphere of radius r
/// about the origin: (e^r - 1)/(e^r + 1).
inline double euclidean_radius(double hyperbolic_radius) {
  return std::tanh(0.5 * hyperbolic_radius);
}

/// Inverse of euclidean_radius: log((1+rho)/(1-rho)).
inline double hyperbolic_radius(double euclidean_radius) {
  return 2.0 * std::atanh(euclidean_radius);
}

inline void require_in_ball(const Vec& x, const char* what) {
  if (!(x.norm() < 1.0)) {
    throw DomainError(std::string(what) + ": point must lie strictly inside the unit ball");
  }
}

}  // namespace qmod
