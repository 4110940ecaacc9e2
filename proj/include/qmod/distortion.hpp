#pragma once

#include "qmod/core.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qmod {

/// A map sampled pointwise, with an optional closed-form derivative.
struct MapSample {
  std::function<Vec(const Vec&)> f;
  std::function<Mat(const Vec&)> derivative;  // may be empty
  std::string domain_tag;

  /// Closed-form derivative if present, else central differences.
  Mat jacobian(const Vec& x) const;
};

struct NormAndDet {
  double norm = 0.0;  // largest singular value
  double det = 0.0;
};
NormAndDet operator_norm_and_jacobian(const Mat& j);

/// ||J||^n / |det J| for nonsingular J, 1 for J = 0, +inf for singular
/// nonzero J. A determinant below 1e-14 ||J||^n counts as singular.
double outer_dilatation(const Mat& j);

/// Central differences with step h; h <= 0 selects 1e-5 (1 - |x|).
Mat finite_difference_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 0.0);

/// Max entrywise gap between the step-h and step-h/2 difference Jacobians.
double richardson_gap(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 0.0);

enum class CalderonVerdict { Converges, DivergesOrInconclusive };
std::string to_string(CalderonVerdict v);

struct CalderonRow {
  double t = 0.0;
  double partial = 0.0;    // int_1^T (t / phi(t))^{1/(n-2)} dt
  double increment = 0.0;  // partial(T) - partial(T/2)
};

struct CalderonReport {
  std::vector<CalderonRow> rows;
  CalderonVerdict verdict = CalderonVerdict::DivergesOrInconclusive;
  double tail_ratio = 0.0;       // median ratio of consecutive increments
  double decay_exponent = 0.0;   // fitted p in increment ~ k^{-p}
};

/// Partial integrals on the doubling schedule T = 2, 4, ..., T_max. The
/// verdict is "converges" when the last increment is below tol and the
/// increments decay geometrically or like k^{-p} with p >= 1.5.
CalderonReport calderon_check(const std::function<double(double)>& phi, int n, double t_max, double tol);

struct MultiplicityReport {
  int count = 0;
  std::size_t hits = 0;
  bool degenerate = false;  // f is constant on the sample set
};

/// Clusters of samples x with |f(x) - y| < tol, linked when closer than 10 tol.
MultiplicityReport multiplicity_estimate(const MapSample& map, const std::vector<Vec>& samples, const Vec& y,
                                         double tol);

struct EnergyEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

/// Monte Carlo estimate of int_{|x| < radius} phi(||f'(x)||) dm(x).
EnergyEstimate orlicz_energy(const MapSample& map, const std::function<double(double)>& phi, int n, double radius,
                             std::size_t samples, std::uint64_t seed);

/// Fraction of samples where det f' = 0 while f' != 0.
double finite_distortion_defect(const MapSample& map, const std::vector<Vec>& samples);

}  // namespace qmod
