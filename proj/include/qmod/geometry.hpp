#pragma once

#include "qmod/core.hpp"
#include "qmod/mobius.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace qmod {

/// Hyperbolic distance in the ball model:
/// h(x, y) = log((1+t)/(1-t)), t = |x-y| / sqrt(|x-y|^2 + (1-|x|^2)(1-|y|^2)).
double hyp_distance(const Vec& x, const Vec& y);

using GroupRef = std::shared_ptr<const DiscreteGroup>;

/// An orbit G x of the ball, identified by a chosen representative.
struct QuotientPoint {
  Vec rep;
  GroupRef group;

  QuotientPoint(Vec representative, GroupRef g);
};

/// min over stored g of h(x, g y) and h(g x, y). Upper bound on the quotient
/// metric; exact when x and y share a normal neighbourhood.
double quotient_distance(const DiscreteGroup& group, const Vec& x, const Vec& y);

inline constexpr double kTrivialNormalRadiusCap = 5.0;

/// Half the shortest displacement of x0 by a stored non-identity element,
/// capped at `cap` (which is also returned for the trivial group).
double normal_radius(const DiscreteGroup& group, const Vec& x0, double cap = kTrivialNormalRadiusCap);

/// Membership in the normal fundamental polyhedron centred at x0:
/// h(x, x0) < h(x, T x0) for every stored T != I.
bool dirichlet_contains(const DiscreteGroup& group, const Vec& x0, const Vec& x);

/// Quotient length of a polyline: sum of quotient distances of consecutive
/// vertices, with segments bisected until the relative change is < rel_tol.
struct CurveLength {
  double length = 0.0;
  int refinements = 0;
  bool converged = false;
};
CurveLength quotient_curve_length(const DiscreteGroup& group, const std::vector<Vec>& polyline,
                                  double rel_tol = 1e-4, int max_refinements = 20);

/// A normal neighbourhood B~(p0, radius) with the chart that sends the
/// representative of p0 to the origin. Chart coordinates are ball points
/// near 0; chart_to_ball is the inverse natural projection composed with
/// the centring motion.
class ChartedNeighborhood {
 public:
  /// radius <= 0 selects normal_radius(group, center).
  ChartedNeighborhood(GroupRef group, const Vec& center, double radius = 0.0);

  static ChartedNeighborhood trivial(int n, double radius = kTrivialNormalRadiusCap);

  int dim() const { return static_cast<int>(center_.rep.size()); }
  const QuotientPoint& center() const { return center_; }
  const DiscreteGroup& group() const { return *center_.group; }
  double radius() const { return radius_; }

  Vec chart_to_ball(const Vec& y) const { return from_chart_.apply(y); }
  Vec ball_to_chart(const Vec& x) const { return to_chart_.apply(x); }

 private:
  QuotientPoint center_;
  double radius_;
  MobiusMotion to_chart_;
  MobiusMotion from_chart_;
};

/// Empirical constant c1 of c1 h(z1, z2) <= |z1 - z2| <= h(z1, z2) on
/// B_h(0, r0): the minimum of |z1 - z2| / h(z1, z2) over sampled pairs,
/// including close pairs at the boundary sphere and pairs through 0.
struct MetricComparison {
  double c1 = 0.0;
  double max_ratio = 0.0;  // sup |z1 - z2| / h, must be <= 1
  std::size_t pairs = 0;
};
MetricComparison estimate_metric_comparison(int n, double r0, std::size_t pairs, std::uint64_t seed);

}  // namespace qmod
