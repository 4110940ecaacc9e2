#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace qmod {

/// 20-point Gauss-Legendre rule on [a, b].
template <class F>
double gauss_legendre_20(F&& f, double a, double b) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    acc += w[k] * (f(mid - half * x[k]) + f(mid + half * x[k]));
  }
  return half * acc;
}

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive 31-point Gauss-Kronrod on [a, b], split at the given interior
/// break points.
template <class F>
AdaptiveResult integrate_adaptive(F&& f, double a, double b, const std::vector<double>& breaks = {},
                                  double rel_tol = 1e-10, unsigned max_depth = 18) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  std::vector<double> pts{a};
  for (double t : breaks)
    if (t > a && t < b) pts.push_back(t);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  // The rule's own error estimate bottoms out near 1e-12 relative; asking
  // for less makes it bisect to max_depth on perfectly smooth integrands.
  const double tol = std::max(rel_tol, 1e-10);
  AdaptiveResult out;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    double err = 0.0;
    out.value += Rule::integrate(f, pts[k], pts[k + 1], max_depth, tol, &err);
    out.error += err;
  }
  return out;
}

/// Gauss-Legendre on geometric panels [b 2^{-k-1}, b 2^{-k}] towards a = 0,
/// for integrands with an integrable singularity at 0, split at breaks.
template <class F>
double integrate_towards_zero(F&& f, double b, const std::vector<double>& breaks = {}, int levels = 40) {
  std::vector<double> pts{0.0};
  const double floor_pt = b * std::ldexp(1.0, -levels);
  for (int k = levels; k >= 1; --k) pts.push_back(b * std::ldexp(1.0, -k));
  for (double t : breaks)
    if (t > floor_pt && t < b) pts.push_back(t);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    if (pts[k + 1] > pts[k]) acc += gauss_legendre_20(f, pts[k], pts[k + 1]);
  }
  return acc;
}

}  // namespace qmod
