#pragma once

#include "qmod/core.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <vector>

namespace qmod {

enum class MetricTag { Hyperbolic, Euclidean };

using Polyline = std::vector<Vec>;

/// Discretised curves in a ball chart. A family member may be a bundle of
/// polylines: its admissibility constraint is then imposed on the average
/// of the bundle's line integrals (a relaxation of imposing it on each).
struct CurveFamily {
  std::vector<std::vector<Polyline>> members;
  MetricTag metric = MetricTag::Hyperbolic;

  static CurveFamily from_curves(std::vector<Polyline> curves, MetricTag metric);

  std::size_t size() const { return members.size(); }
  /// Throws ValidationError unless every polyline has >= 2 vertices, lies
  /// strictly inside the unit ball (hyperbolic tag) and has positive length.
  void validate() const;
};

/// Axis-aligned Cartesian grid over a box in the chart.
struct GridBox {
  Vec lo;
  Vec hi;
  std::vector<int> cells_per_axis;

  int dim() const { return static_cast<int>(lo.size()); }
  std::size_t cell_count() const;
  Vec cell_size() const;
  Vec cell_center(std::size_t flat) const;
  bool contains(const Vec& x) const;
  /// Cube [-half_width, half_width]^n with `cells` cells per axis.
  static GridBox cube(int n, double half_width, int cells);
};

inline constexpr std::size_t kMaxGridCells = std::size_t{1} << 22;

/// Nonnegative density per grid cell with its volume weight.
struct GridField {
  GridBox box;
  MetricTag metric = MetricTag::Hyperbolic;
  std::vector<double> rho;
  std::vector<double> vol_weights;
};

/// Volume of a cell by midpoint rule: h^n, times (2/(1-|c|^2))^n for the
/// hyperbolic metric (infinite outside the ball).
double cell_volume(const GridBox& box, std::size_t flat, MetricTag metric);

/// Sparse per-cell traversal lengths of one polyline, sorted by cell.
struct CellLength {
  std::size_t cell;
  double length;
};
std::vector<CellLength> traverse(const GridBox& box, const Polyline& curve, MetricTag metric);

struct ModulusOptions {
  double tol = 1e-6;               // relative duality gap and constraint violation
  std::size_t max_iterations = 200000;
};

struct ModulusCertificate {
  double objective = 0.0;      // sum w rho^n of the returned (feasible) density
  double dual_bound = 0.0;     // dual function value: a lower bound
  double max_violation = 0.0;  // of the unscaled primal recovery
  std::size_t iterations = 0;
};

struct ModulusResult {
  double value = 0.0;
  GridField field;
  std::vector<double> duals;  // one multiplier per family member
  ModulusCertificate certificate;
};

/// min sum_i w_i rho_i^n  s.t.  sum_i rho_i l_{i,gamma} >= 1 for each member,
/// rho >= 0, solved by projected accelerated dual ascent on the per-member
/// multipliers with closed-form primal recovery. Throws ConvergenceError
/// when the iteration cap is reached first.
ModulusResult modulus_solve(const GridBox& box, const CurveFamily& family, int n,
                            const ModulusOptions& options = {});

/// Radial family joining the spheres of chart radii rho1 < rho2, one segment
/// per direction; bundle_size > 1 averages each member over a fan of
/// sub-rays spread across its share of the sphere.
CurveFamily radial_ring_family(int n, double rho1, double rho2, std::size_t directions,
                               MetricTag metric, std::size_t bundle_size = 1);

nlohmann::json to_json(const ModulusCertificate& cert);

}  // namespace qmod
