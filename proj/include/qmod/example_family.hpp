#pragma once

#include "qmod/core.hpp"
#include "qmod/distortion.hpp"
#include "qmod/geometry.hpp"
#include "qmod/measures.hpp"
#include "qmod/modulus.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qmod {

/// One member g_m of the logarithmic example family on a normal
/// neighbourhood B(p0, r0), written in the chart ball B(0, r0') with
/// r0' = tanh(r0/2).
struct ExampleFamilyConfig {
  int n = 2;
  int m = 2;
  double r0 = 1.0;  // hyperbolic radius of the neighbourhood
  double r0_prime = 0.0;
  GroupRef group;

  /// Builds a config on the trivial group (or `group`) centred at the origin
  /// and checks the invariants. r0 <= 0 selects the normal radius.
  static ExampleFamilyConfig make(int n, int m, double r0, GroupRef group = nullptr);

  void validate() const;
  /// Radius of the sphere where the two branches meet: r0' (m-1)/m.
  double gluing_radius() const;
  ChartedNeighborhood neighborhood() const;
};

enum class Branch { Inner, Outer };

struct GmEval {
  Vec image;
  double norm_closed = 0.0;  // closed-form ||g'(y)||
  double jac_closed = 0.0;   // closed-form |J(y, g)|
  Branch branch = Branch::Inner;
};

/// Inner ball |y| <= r0'(m-1)/m: y (m/(m-1)) log(e m/(m-1)).
/// Annulus: r0' (y/|y|) log(e r0'/|y|).
GmEval gm_family_eval(const ExampleFamilyConfig& cfg, const Vec& y);

/// Closed-form derivative matrix of the same map.
Mat gm_family_derivative(const ExampleFamilyConfig& cfg, const Vec& y);

MapSample gm_map_sample(const ExampleFamilyConfig& cfg);

/// Q(y) = log^{n-1}(e r0'/|y|).
double gm_distortion_bound(const ExampleFamilyConfig& cfg, const Vec& y);

struct DistortionReport {
  std::size_t samples = 0;
  std::size_t annulus_samples = 0;
  double max_excess = -std::numeric_limits<double>::infinity();  // max K_O^{n-1} - Q
  double max_annulus_gap = 0.0;  // max |K_O - log(e r0'/|y|)| on the annulus
  double min_inner_q = std::numeric_limits<double>::infinity();
  std::size_t inner_q_below_one = 0;
  double gluing_mismatch = 0.0;  // max |inner - outer| on the gluing sphere
  double c1 = 0.0;               // empirical metric comparison constant
  double c1_star = 0.0;          // 1 / c1
  double big_c = 0.0;            // e r0' c1*
  std::size_t q_above_q1 = 0;    // samples with Q > Q1
  double eq33_c1_hat = 0.0;      // max_r q*(r) / log^{n-1}(C/r) on the radial grid
  double eq33_c1_bound = 0.0;    // (sinh r0 / r0)^{n-1}
  bool distortion_bound = false;
  bool q1_dominates = false;
  bool eq33_bound = false;
};

/// Samples half the budget uniformly in B(0, r0') and half in the annulus.
DistortionReport example_distortion_check(const ExampleFamilyConfig& cfg, std::size_t sample_count,
                                          std::uint64_t seed, const SphereQuadrature& quad);

/// Q1(p) = log^{n-1}(C / h(p, p0)) with C = e r0' c1*.
ScalarField q1_field(const ExampleFamilyConfig& cfg, double c1_star);

struct RadialProfileReport {
  bool inner_increasing = false;
  bool outer_decreasing = false;
  bool strictly_increasing = false;
  bool continuous = false;
  double max_image_radius = 0.0;  // r0' log(e m/(m-1)), reached on the gluing sphere
  double boundary_value = 0.0;    // |g(y)| at |y| = r0'
};
/// Samples |g_m(s e1)| on a radial grid of `points` radii.
RadialProfileReport radial_profile_check(const ExampleFamilyConfig& cfg, int points = 4001);

struct EquicontinuityRow {
  double delta = 0.0;
  double rho_delta = 0.0;  // tanh(delta/2)
  double displacement = 0.0;
  int argmax_m = 0;
  double bound = 0.0;  // 2 log(2e) rho_delta
};

struct EquicontinuityProfile {
  std::vector<EquicontinuityRow> rows;
  bool nonincreasing = false;  // along the decreasing delta list
  bool within_bound = false;
  // Restriction to B(p0, r0/2): union of the images and an omitted cap.
  double restricted_image_radius = 0.0;
  double continuum_radius = 0.0;
  double continuum_diameter = 0.0;
  bool continuum_omitted = false;
};

/// sup over m in m_list and |x| < tanh(delta/2) of |g_m(x) - g_m(0)| for
/// each delta, from a radial grid in each direction of a direction set.
EquicontinuityProfile equicontinuity_profile(int n, double r0, const std::vector<int>& m_list,
                                             const std::vector<double>& delta_list, int radial_points = 2001,
                                             std::size_t directions = 16, std::uint64_t seed = 1);

}  // namespace qmod
