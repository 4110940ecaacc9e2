#pragma once

#include "qmod/core.hpp"
#include "qmod/geometry.hpp"
#include "qmod/measures.hpp"
#include "qmod/modulus_solver.hpp"

#include <functional>
#include <string>
#include <vector>

namespace qmod {

/// Modulus of the curves joining the boundary spheres of the ring
/// r1 < |x| < r2 in R^n: omega_{n-1} (log(r2/r1))^{1-n}.
double ring_modulus_exact(double r1, double r2, int n);

/// Finite measure space with atoms of weight mu_i and a positive function phi.
struct DiscreteMeasureSpace {
  std::vector<double> mu;
  std::vector<double> phi;

  void validate() const;
  double total_weight() const;
};

struct WeightedInfimum {
  double value = 0.0;
  std::vector<double> alpha_star;
};

/// inf over alpha >= 0 with sum mu alpha = 1 of sum mu phi alpha^q, which is
/// (sum mu phi^{-lambda})^{-1/lambda} with lambda = 1/(q-1), attained at
/// alpha_i = phi_i^{-lambda} / sum mu phi^{-lambda}.
WeightedInfimum weighted_inf_integral(const DiscreteMeasureSpace& space, double q);

/// sum mu phi alpha^q.
double weighted_objective(const DiscreteMeasureSpace& space, const std::vector<double>& alpha, double q);

using RadialProfile = std::function<double(double)>;

struct Eta0Weight {
  double integral = 0.0;   // I = int_{r1}^{r2} dr / (r q^{1/(n-1)}(r))
  bool degenerate = false;  // I infinite; eta0 is then identically 0
  int n = 2;
  double r1 = 0.0;
  double r2 = 0.0;
  RadialProfile q;

  double operator()(double r) const;
};

/// Extremal weight eta0(r) = 1 / (I r q^{1/(n-1)}(r)) on (r1, r2). r1 = 0 is
/// allowed; divergence of I is detected by halving towards 0.
Eta0Weight eta0_weight(const RadialProfile& q_profile, double r1, double r2, int n);

struct LowerBound {
  double value = 0.0;          // int_eps^{eps0} dr / ||Q||_{n-1}(r)
  double value_mean_form = 0.0;  // the same through the spherical mean of Q^{n-1}
  double residual = 0.0;       // relative disagreement of the two forms
  bool infinite = false;
};
LowerBound lower_bound_integral(const ChartedNeighborhood& nbhd, const ScalarField& q, double eps, double eps0,
                                const SphereQuadrature& quad);

/// A map of the chart into the ball (chart coordinates in and out).
using ChartMap = std::function<Vec(const Vec&)>;

/// Empirical constants of the volume/shell comparison for the hyperbolic
/// shell measure: C2_hat <= V/S <= C1_hat over a field battery, padded by
/// the relative quadrature tolerance. M1_hat = 1/C2_hat, M2_hat = C1_hat/C2_hat^2.
struct ExtremalConstants {
  double c1_hat = 0.0;
  double c2_hat = 0.0;
  double m1_hat = 0.0;
  double m2_hat = 0.0;
  double tolerance = 0.0;
};
ExtremalConstants extremal_constants(const ChartedNeighborhood& nbhd, double r0,
                                     const std::vector<ScalarField>& battery, const SphereQuadrature& quad,
                                     double tolerance = 1e-8);

struct SandwichRow {
  std::string eta_label;
  double eta_integral = 0.0;
  double lhs = 0.0;     // omega / I^{n-1}
  double middle = 0.0;  // M1_hat int Q eta0^n dv
  double right = 0.0;   // M2_hat int Q eta^n dv
  bool ordered = false;
};

/// The admissible weights compared in the extremal sandwich: eta0, the
/// uniform weight 1/(r2-r1) and the triangular weight peaking mid-ring, each
/// integrating to 1 on (r1, r2).
struct LabelledEta {
  std::string label;
  RadialProfile eta;
};
std::vector<LabelledEta> eta_battery(const Eta0Weight& eta0);

/// omega/I^{n-1} <= M1_hat int Q eta0^n dv <= M2_hat int Q eta^n dv for each
/// battery member, with q the spherical mean of Q.
std::vector<SandwichRow> extremal_sandwich(const ChartedNeighborhood& nbhd, const ScalarField& q, double r1,
                                           double r2, const ExtremalConstants& constants,
                                           const SphereQuadrature& quad);

/// Spherical-mean profile r -> q_mean(r) of a field.
RadialProfile mean_profile(const ChartedNeighborhood& nbhd, const ScalarField& q, const SphereQuadrature& quad);

struct RingOptions {
  std::size_t directions = 0;  // 0: 512 for n = 2, 2048 for n = 3, 4096 otherwise
  std::size_t bundle_size = 0;  // 0: cover the outer sphere's grid cells about twice
  int cells = 0;               // 0: 256 for n = 2, 128 otherwise
  int vertices_per_curve = 65;
  double solver_tol = 1e-5;
  double discretization_tol = 0.05;  // relative allowance for the grid/ray discretisation of the left side
};

struct RingReport {
  double lhs = 0.0;  // discrete modulus of the image family
  double rhs = 0.0;  // int Q eta^n dv over the ring
  double eta_integral = 0.0;
  double margin = 0.0;  // (rhs - lhs) / rhs
  bool strict_pass = false;
  bool pass = false;  // lhs <= rhs (1 + discretization_tol)
  ModulusCertificate certificate;
  std::size_t directions = 0;
  std::size_t bundle_size = 0;
  int cells = 0;
  double i_value = 0.0;  // I for the q profile of Q
  double lhs_closed = 0.0;  // omega / I^{n-1}
};

/// Ring inequality for a map of the charted neighbourhood: the modulus of
/// the image of the radial family between the geodesic spheres of radii
/// r1 < r2 about p0 against int_{r1 < h < r2} Q eta^n(h) dv. Throws
/// ValidationError if int eta < 1 on (r1, r2).
RingReport ring_inequality_check(const ChartedNeighborhood& nbhd, const ChartMap& map, const ScalarField& q,
                                 double r1, double r2, const RadialProfile& eta, const SphereQuadrature& quad,
                                 const RingOptions& options = {});

/// int_{r1}^{r2} eta^n(r) int_{S(r)} Q dH dr = int over the ring of Q eta^n dv.
double weighted_ring_integral(const ChartedNeighborhood& nbhd, const ScalarField& q, double r1, double r2,
                              const RadialProfile& eta, const SphereQuadrature& quad);

/// Discrete modulus of the radial family between chart radii rho1 < rho2,
/// pushed through `map`, on a hyperbolic-weighted grid.
ModulusResult image_ring_modulus(int n, const ChartMap& map, double rho1, double rho2, const RingOptions& options,
                                 RingOptions* resolved = nullptr);

/// Bundle size at which the fan of sub-rays crosses every grid cell along
/// the outer sphere about twice.
std::size_t default_bundle_size(int n, double rho_outer, double half_width, int cells, std::size_t directions);

enum class DivergenceVerdict { Divergent, Convergent, Inconclusive };
std::string to_string(DivergenceVerdict v);

struct DivergenceRow {
  double eps = 0.0;
  double integral = 0.0;
  double increment = 0.0;  // I(eps_k) - I(eps_{k-1})
  double slope = 0.0;      // increment / log(eps_{k-1}/eps_k)
};

struct DivergenceOptions {
  double threshold_slope = 0.01;  // minimum tail growth per unit log(1/eps) for "divergent"
  double geometric_ratio = 0.9;   // tail slope ratio at or below which the tail counts as summable
  std::size_t tail = 4;
};

struct DivergenceProfile {
  std::vector<DivergenceRow> rows;
  DivergenceVerdict verdict = DivergenceVerdict::Inconclusive;
  double tail_ratio = 0.0;  // median ratio of consecutive tail slopes
  double tail_slope = 0.0;  // last slope
};

/// I(eps) = int_eps^{eps0} dr / (r q^{1/(n-1)}(r)) for a radial profile q.
DivergenceProfile divergence_profile(const RadialProfile& q_profile, int n, double eps0,
                                     const std::vector<double>& eps_list, const DivergenceOptions& options = {});

/// Same, with q the spherical mean of the field Q about p0.
DivergenceProfile divergence_profile(const ChartedNeighborhood& nbhd, const ScalarField& q, double eps0,
                                     const std::vector<double>& eps_list, const SphereQuadrature& quad,
                                     const DivergenceOptions& options = {});

/// Verdict from the tail of a sequence of increments over the given
/// log-step widths.
DivergenceVerdict classify_tail(const std::vector<DivergenceRow>& rows, const DivergenceOptions& options,
                                double* tail_ratio = nullptr);

}  // namespace qmod
