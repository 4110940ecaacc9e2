#pragma once

#include "qmod/core.hpp"
#include "qmod/geometry.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qmod {

/// A nonnegative density given in the chart coordinates of a charted
/// neighbourhood (the chart centre p0 sits at the origin). Radial fields
/// record the hyperbolic radii at which they may jump.
class ScalarField {
 public:
  using Fn = std::function<double(const Vec&)>;

  ScalarField(Fn eval, std::string label, std::vector<double> radial_breaks = {});

  double operator()(const Vec& y) const { return eval_(y); }
  const std::string& label() const { return label_; }
  const std::vector<double>& radial_breaks() const { return breaks_; }

  /// y -> Q(y)^p, with 0^p = 0.
  ScalarField pow(double p) const;
  ScalarField scaled(double c) const;

  static ScalarField constant(double c);
  /// Q(y) = profile(h(y, 0)).
  static ScalarField radial(std::function<double(double)> profile, std::string label,
                            std::vector<double> breaks = {});
  /// 1 on a <= h(y, 0) < b, 0 elsewhere.
  static ScalarField radial_indicator(double a, double b);
  /// max(0, log(C / h(y, 0))).
  static ScalarField log_fmo(double c);
  /// 1 / h(y, 0).
  static ScalarField inverse_distance();
  /// exp(a / h(y, 0)).
  static ScalarField exp_inverse(double a);
  /// max(0, log(C / h(y, 0)))^{n-1}.
  static ScalarField log_power(double c, int n);
  /// c + <b, y>.
  static ScalarField affine(double c, const Vec& b);

  /// {"kind": "constant"|"radial_indicator"|"log_fmo"|"inverse_distance"|
  ///  "exp_inverse"|"log_power"|"affine", ...parameters}.
  static ScalarField from_json(const nlohmann::json& spec, int n);

 private:
  Fn eval_;
  std::string label_;
  std::vector<double> breaks_;
};

/// Builds a chart field from a density on the ball: y -> Q(chart_to_ball(y)).
ScalarField pullback(const std::function<double(const Vec&)>& ball_field, const ChartedNeighborhood& nbhd,
                     std::string label);

/// Nodes and weights on S^{n-1}; weights sum to the sphere area.
struct SphereQuadrature {
  std::vector<Vec> nodes;
  std::vector<double> weights;

  /// n = 2: 256-point trapezoid. n = 3: 20 Gauss-Legendre nodes in cos(theta)
  /// times 40 equispaced azimuths. n >= 4: `mc_nodes` seeded random nodes.
  static SphereQuadrature make(int n, std::uint64_t seed = 1, std::size_t mc_nodes = 4096);

  int dim() const { return nodes.empty() ? 0 : static_cast<int>(nodes.front().size()); }
  double total_weight() const;
};

enum class ShellMeasure { Hyperbolic, Euclidean };

/// Integral of Q over the geodesic sphere of hyperbolic radius r about p0,
/// computed in the chart on the Euclidean sphere of radius rho = tanh(r/2)
/// with area density (2/(1-rho^2))^{n-1}; the Euclidean variant uses the
/// Euclidean Hausdorff measure of the same sphere.
double sphere_integral(const ChartedNeighborhood& nbhd, double r, const ScalarField& q,
                       const SphereQuadrature& quad, ShellMeasure measure = ShellMeasure::Hyperbolic);

/// int_0^{r0} sphere_integral(r) dr by adaptive Gauss-Kronrod in r, split at
/// the field's radial breaks.
double shell_integral(const ChartedNeighborhood& nbhd, double r0, const ScalarField& q,
                      const SphereQuadrature& quad, ShellMeasure measure = ShellMeasure::Hyperbolic);

struct MonteCarloEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

/// int over the hyperbolic ball B(p0, r0) of Q dv with dv = 2^n dm/(1-|x|^2)^n,
/// by Monte Carlo stratified in (rho/rho0)^n. Stratum k draws from stream k
/// of `seed`, so the result does not depend on `threads`.
MonteCarloEstimate ball_integral(const ChartedNeighborhood& nbhd, double r0, const ScalarField& q,
                                 std::size_t budget, std::uint64_t seed, unsigned threads = 1);

/// The same volume integral by a deterministic product rule: composite
/// Gauss-Legendre in the chart radius (geometric panels towards 0, split at
/// radial breaks) times the sphere quadrature.
double volume_integral(const ChartedNeighborhood& nbhd, double r0, const ScalarField& q,
                       const SphereQuadrature& quad);

struct FubiniReport {
  double volume = 0.0;         // Monte Carlo volume integral
  double volume_stderr = 0.0;
  double shell_euclidean = 0.0;
  double shell_hyperbolic = 0.0;
  double ratio = 0.0;          // volume / shell_euclidean
  double ratio_hyperbolic = 0.0;
  double lower = 0.0;          // 2^{n-1}
  double upper = 0.0;          // 2^n C(r0), C(r0) = 1/(2(1-rho0^2)^{n-1})
  bool degenerate = false;     // both sides vanish
  bool in_bracket = false;
  double relative_error = 0.0;  // volume_stderr / volume
};

/// Both sides of the volume/shell comparison on B(p0, r0) for one field.
/// The bracket holds pointwise in r for the Euclidean shell measure.
FubiniReport fubini_sandwich(const ChartedNeighborhood& nbhd, double r0, const ScalarField& q,
                             const SphereQuadrature& quad, std::size_t budget, std::uint64_t seed,
                             unsigned threads = 1);

double fubini_constant(int n, double r0);

struct QStats {
  double q_mean = 0.0;      // sphere mean of Q normalised by omega r^{n-1}
  double q_norm = 0.0;      // (int_S Q^{n-1})^{1/(n-1)}
  double q_tilde = 0.0;     // mean of Q^{n-1} normalised by omega r^{n-1}
  double identity_residual = 0.0;  // |1/q_norm - omega^{-1/(n-1)}/(r q_tilde^{1/(n-1)})| relative
};
QStats q_stats(const ChartedNeighborhood& nbhd, double r, const ScalarField& q, const SphereQuadrature& quad);

struct FmoRow {
  double eps = 0.0;
  double mean = 0.0;
  double oscillation = 0.0;
};
struct FmoProfile {
  std::vector<FmoRow> rows;
  double max_oscillation = 0.0;
  double median_oscillation = 0.0;
  bool bounded = false;  // max <= 2 x median
};
/// Mean oscillation of Q over the balls B(p0, eps), eps decreasing.
FmoProfile fmo_profile(const ChartedNeighborhood& nbhd, const ScalarField& q, const std::vector<double>& eps_list,
                       const SphereQuadrature& quad);

}  // namespace qmod
