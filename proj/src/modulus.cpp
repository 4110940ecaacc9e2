#include "qmod/modulus.hpp"

#include "qmod/quadrature.hpp"

#include <algorithm>
#include <limits>

namespace qmod {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double radial_integrand(const RadialProfile& q, int n, double r) {
  const double v = q(r);
  if (!(v >= 0.0)) throw ValidationError("radial profile must be nonnegative");
  if (v == 0.0) return kInf;
  return 1.0 / (r * std::pow(v, 1.0 / (n - 1)));
}

// In t = log r the integrand is r * radial_integrand, which stays O(1) on
// every dyadic shell down to 0.
double integrate_profile(const RadialProfile& q, int n, double a, double b) {
  auto f = [&](double t) {
    const double r = std::exp(t);
    return r * radial_integrand(q, n, r);
  };
  const double v = integrate_adaptive(f, std::log(a), std::log(b), {}, 1e-12).value;
  return std::isfinite(v) ? v : kInf;
}

}  // namespace

double ring_modulus_exact(double r1, double r2, int n) {
  if (n < 2) throw DomainError("ring_modulus_exact: n must be >= 2");
  if (!(0.0 < r1 && r1 < r2)) throw DomainError("ring_modulus_exact: need 0 < r1 < r2");
  return unit_sphere_area(n) * std::pow(std::log(r2 / r1), 1.0 - n);
}

void DiscreteMeasureSpace::validate() const {
  if (mu.empty() || mu.size() != phi.size()) throw ValidationError("DiscreteMeasureSpace: atom count mismatch");
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!(mu[i] > 0.0) || !std::isfinite(mu[i])) throw ValidationError("DiscreteMeasureSpace: weights must be positive");
    if (!(phi[i] > 0.0) || !std::isfinite(phi[i])) throw ValidationError("DiscreteMeasureSpace: phi must be positive");
  }
}

double DiscreteMeasureSpace::total_weight() const {
  double acc = 0.0;
  for (double m : mu) acc += m;
  return acc;
}

WeightedInfimum weighted_inf_integral(const DiscreteMeasureSpace& space, double q) {
  if (!(q > 1.0)) throw DomainError("weighted_inf_integral: q must exceed 1");
  space.validate();
  const double lambda = 1.0 / (q - 1.0);
  double s = 0.0;
  for (std::size_t i = 0; i < space.mu.size(); ++i) s += space.mu[i] * std::pow(space.phi[i], -lambda);
  WeightedInfimum out;
  out.value = std::pow(s, -1.0 / lambda);
  for (double p : space.phi) out.alpha_star.push_back(std::pow(p, -lambda) / s);
  return out;
}

double weighted_objective(const DiscreteMeasureSpace& space, const std::vector<double>& alpha, double q) {
  if (alpha.size() != space.mu.size()) throw ValidationError("weighted_objective: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) acc += space.mu[i] * space.phi[i] * std::pow(alpha[i], q);
  return acc;
}

double Eta0Weight::operator()(double r) const {
  if (degenerate || !(r > r1 && r < r2)) return 0.0;
  return 1.0 / (integral * r * std::pow(q(r), 1.0 / (n - 1)));
}

Eta0Weight eta0_weight(const RadialProfile& q_profile, double r1, double r2, int n) {
  if (n < 2) throw DomainError("eta0_weight: n must be >= 2");
  if (!(0.0 <= r1 && r1 < r2)) throw DomainError("eta0_weight: need 0 <= r1 < r2");
  Eta0Weight w;
  w.n = n;
  w.r1 = r1;
  w.r2 = r2;
  w.q = q_profile;
  if (r1 > 0.0) {
    w.integral = integrate_profile(q_profile, n, r1, r2);
  } else {
    // Sum over dyadic pieces towards 0; a tail that is still contributing
    // after 60 halvings is taken as divergence.
    double total = 0.0, last = 0.0;
    for (int k = 0; k < 60 && std::isfinite(total); ++k) {
      last = integrate_profile(q_profile, n, r2 * std::ldexp(1.0, -k - 1), r2 * std::ldexp(1.0, -k));
      total += last;
    }
    w.integral = (std::isfinite(total) && last <= 1e-12 * total) ? total : kInf;
  }
  if (w.integral == 0.0) throw ValidationError("eta0_weight: I = 0, the profile is infinite");
  if (!std::isfinite(w.integral)) {
    w.degenerate = true;
    w.integral = kInf;
  }
  return w;
}

LowerBound lower_bound_integral(const ChartedNeighborhood& nbhd, const ScalarField& q, double eps, double eps0,
                                const SphereQuadrature& quad) {
  if (!(0.0 < eps && eps < eps0 && eps0 <= nbhd.radius())) {
    throw DomainError("lower_bound_integral: need 0 < eps < eps0 <= radius");
  }
  const int n = nbhd.dim();
  const double omega = unit_sphere_area(n);
  const auto power = q.pow(n - 1);
  auto norm_form = [&](double r) {
    const double s = sphere_integral(nbhd, r, power, quad);
    return s > 0.0 ? 1.0 / std::pow(s, 1.0 / (n - 1)) : kInf;
  };
  auto mean_form = [&](double r) {
    const double q_tilde = sphere_integral(nbhd, r, power, quad) / (omega * std::pow(r, n - 1));
    return q_tilde > 0.0 ? std::pow(omega, -1.0 / (n - 1)) / (r * std::pow(q_tilde, 1.0 / (n - 1))) : kInf;
  };
  LowerBound lb;
  lb.value = integrate_adaptive(norm_form, eps, eps0, q.radial_breaks(), 1e-12).value;
  lb.value_mean_form = integrate_adaptive(mean_form, eps, eps0, q.radial_breaks(), 1e-12).value;
  if (!std::isfinite(lb.value) || !std::isfinite(lb.value_mean_form)) {
    lb.infinite = true;
    lb.value = lb.value_mean_form = kInf;
    return lb;
  }
  lb.residual = lb.value > 0.0 ? std::abs(lb.value - lb.value_mean_form) / lb.value : 0.0;
  return lb;
}

ExtremalConstants extremal_constants(const ChartedNeighborhood& nbhd, double r0,
                                     const std::vector<ScalarField>& battery, const SphereQuadrature& quad,
                                     double tolerance) {
  double lo = kInf, hi = 0.0;
  for (const auto& q : battery) {
    const double v = volume_integral(nbhd, r0, q, quad);
    const double s = shell_integral(nbhd, r0, q, quad, ShellMeasure::Hyperbolic);
    if (v == 0.0 && s == 0.0) continue;
    lo = std::min(lo, v / s);
    hi = std::max(hi, v / s);
  }
  if (!std::isfinite(lo) || !(hi > 0.0)) throw ValidationError("extremal_constants: battery has no nonzero field");
  ExtremalConstants c;
  c.tolerance = tolerance;
  c.c2_hat = lo * (1.0 - tolerance);
  c.c1_hat = hi * (1.0 + tolerance);
  c.m1_hat = 1.0 / c.c2_hat;
  c.m2_hat = c.c1_hat / (c.c2_hat * c.c2_hat);
  return c;
}

RadialProfile mean_profile(const ChartedNeighborhood& nbhd, const ScalarField& q, const SphereQuadrature& quad) {
  const ChartedNeighborhood chart = nbhd;
  return [chart, q, quad](double r) { return q_stats(chart, r, q, quad).q_mean; };
}

std::vector<LabelledEta> eta_battery(const Eta0Weight& eta0) {
  const double r1 = eta0.r1, r2 = eta0.r2;
  const double width = r2 - r1, mid = 0.5 * (r1 + r2);
  std::vector<LabelledEta> out;
  out.push_back({"eta0", [eta0](double r) { return eta0(r); }});
  out.push_back({"uniform", [r1, r2, width](double r) { return (r > r1 && r < r2) ? 1.0 / width : 0.0; }});
  out.push_back({"triangular", [r1, r2, width, mid](double r) {
                   if (!(r > r1 && r < r2)) return 0.0;
                   return (2.0 / width) * (1.0 - std::abs(r - mid) / (0.5 * width));
                 }});
  return out;
}

double weighted_ring_integral(const ChartedNeighborhood& nbhd, const ScalarField& q, double r1, double r2,
                              const RadialProfile& eta, const SphereQuadrature& quad) {
  if (!(0.0 < r1 && r1 < r2 && r2 <= nbhd.radius())) throw DomainError("weighted_ring_integral: need 0 < r1 < r2 <= radius");
  const int n = nbhd.dim();
  std::vector<double> breaks = q.radial_breaks();
  breaks.push_back(0.5 * (r1 + r2));  // kink of the triangular weight
  auto f = [&](double r) {
    const double e = eta(r);
    if (e == 0.0) return 0.0;
    return std::pow(e, n) * sphere_integral(nbhd, r, q, quad);
  };
  return integrate_adaptive(f, r1, r2, breaks, 1e-12).value;
}

std::vector<SandwichRow> extremal_sandwich(const ChartedNeighborhood& nbhd, const ScalarField& q, double r1,
                                           double r2, const ExtremalConstants& constants,
                                           const SphereQuadrature& quad) {
  const int n = nbhd.dim();
  const auto eta0 = eta0_weight(mean_profile(nbhd, q, quad), r1, r2, n);
  if (eta0.degenerate) throw ValidationError("extremal_sandwich: I is infinite for this field");
  const double lhs = unit_sphere_area(n) / std::pow(eta0.integral, n - 1);
  const double middle = constants.m1_hat * weighted_ring_integral(nbhd, q, r1, r2, eta0, quad);
  std::vector<SandwichRow> rows;
  for (const auto& member : eta_battery(eta0)) {
    SandwichRow row;
    row.eta_label = member.label;
    row.eta_integral = integrate_adaptive(member.eta, r1, r2, {0.5 * (r1 + r2)}, 1e-12).value;
    row.lhs = lhs;
    row.middle = middle;
    row.right = constants.m2_hat * weighted_ring_integral(nbhd, q, r1, r2, member.eta, quad);
    row.ordered = row.lhs <= row.middle && row.middle <= row.right;
    rows.push_back(row);
  }
  return rows;
}

std::size_t default_bundle_size(int n, double rho_outer, double half_width, int cells, std::size_t directions) {
  const double h = 2.0 * half_width / cells;
  const double boundary_cells = unit_sphere_area(n) * std::pow(rho_outer / h, n - 1);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(2.0 * boundary_cells / directions)));
}

ModulusResult image_ring_modulus(int n, const ChartMap& map, double rho1, double rho2, const RingOptions& options,
                                 RingOptions* resolved) {
  RingOptions opt = options;
  if (opt.directions == 0) opt.directions = n == 2 ? 512 : n == 3 ? 2048 : 4096;
  if (opt.cells == 0) opt.cells = n == 2 ? 256 : 128;
  if (opt.vertices_per_curve < 2) throw ValidationError("image_ring_modulus: need >= 2 vertices per curve");

  // Bundle size is resolved against the identity image first; the grid is
  // then fitted to the mapped curves.
  const double hw0 = rho2 * (1.0 + 1e-9);
  if (opt.bundle_size == 0) opt.bundle_size = default_bundle_size(n, rho2, hw0, opt.cells, opt.directions);
  const auto base = radial_ring_family(n, rho1, rho2, opt.directions, MetricTag::Hyperbolic, opt.bundle_size);

  CurveFamily family;
  family.metric = MetricTag::Hyperbolic;
  double extent = 0.0;
  const int m = opt.vertices_per_curve;
  for (const auto& member : base.members) {
    std::vector<Polyline> mapped;
    for (const auto& seg : member) {
      Polyline pl;
      for (int k = 0; k < m; ++k) {
        const double t = static_cast<double>(k) / (m - 1);
        Vec y = map(seg.front() + t * (seg.back() - seg.front()));
        if (!(y.norm() < 1.0)) throw DomainError("image_ring_modulus: map leaves the unit ball");
        extent = std::max(extent, y.cwiseAbs().maxCoeff());
        pl.push_back(std::move(y));
      }
      mapped.push_back(std::move(pl));
    }
    family.members.push_back(std::move(mapped));
  }
  if (resolved) *resolved = opt;
  const GridBox box = GridBox::cube(n, extent * (1.0 + 1e-9), opt.cells);
  ModulusOptions mopt;
  mopt.tol = opt.solver_tol;
  return modulus_solve(box, family, n, mopt);
}

RingReport ring_inequality_check(const ChartedNeighborhood& nbhd, const ChartMap& map, const ScalarField& q,
                                 double r1, double r2, const RadialProfile& eta, const SphereQuadrature& quad,
                                 const RingOptions& options) {
  if (!(0.0 < r1 && r1 < r2 && r2 <= nbhd.radius())) throw DomainError("ring_inequality_check: need 0 < r1 < r2 <= radius");
  const int n = nbhd.dim();
  RingReport rep;
  rep.eta_integral = integrate_adaptive(eta, r1, r2, {0.5 * (r1 + r2)}, 1e-12).value;
  if (!(rep.eta_integral >= 1.0 - 1e-9)) {
    throw ValidationError("ring_inequality_check: eta integrates to " + std::to_string(rep.eta_integral) +
                          " < 1 over (r1, r2)");
  }
  RingOptions resolved;
  const auto res = image_ring_modulus(n, map, euclidean_radius(r1), euclidean_radius(r2), options, &resolved);
  rep.lhs = res.value;
  rep.certificate = res.certificate;
  rep.directions = resolved.directions;
  rep.bundle_size = resolved.bundle_size;
  rep.cells = resolved.cells;
  rep.rhs = weighted_ring_integral(nbhd, q, r1, r2, eta, quad);
  rep.margin = (rep.rhs - rep.lhs) / rep.rhs;
  rep.strict_pass = rep.lhs <= rep.rhs;
  rep.pass = rep.lhs <= rep.rhs * (1.0 + options.discretization_tol);
  const auto eta0 = eta0_weight(mean_profile(nbhd, q, quad), r1, r2, n);
  rep.i_value = eta0.integral;
  rep.lhs_closed = eta0.degenerate ? 0.0 : unit_sphere_area(n) / std::pow(eta0.integral, n - 1);
  return rep;
}

std::string to_string(DivergenceVerdict v) {
  switch (v) {
    case DivergenceVerdict::Divergent: return "divergent";
    case DivergenceVerdict::Convergent: return "convergent";
    default: return "inconclusive";
  }
}

DivergenceVerdict classify_tail(const std::vector<DivergenceRow>& rows, const DivergenceOptions& options,
                                double* tail_ratio) {
  const std::size_t tail = std::max<std::size_t>(3, options.tail);
  if (rows.size() < tail) return DivergenceVerdict::Inconclusive;
  std::vector<double> ratios;
  bool vanished = false;
  for (std::size_t k = rows.size() - tail + 1; k < rows.size(); ++k) {
    const double prev = rows[k - 1].slope;
    if (prev <= 0.0) {
      vanished = true;
      ratios.push_back(0.0);
    } else {
      ratios.push_back(rows[k].slope / prev);
    }
  }
  std::sort(ratios.begin(), ratios.end());
  const double median = ratios[ratios.size() / 2];
  if (tail_ratio) *tail_ratio = median;
  if (!std::isfinite(rows.back().integral)) return DivergenceVerdict::Divergent;
  if (vanished && rows.back().slope == 0.0) return DivergenceVerdict::Convergent;
  if (median <= options.geometric_ratio) return DivergenceVerdict::Convergent;
  if (rows.back().slope >= options.threshold_slope) return DivergenceVerdict::Divergent;
  return DivergenceVerdict::Inconclusive;
}

DivergenceProfile divergence_profile(const RadialProfile& q_profile, int n, double eps0,
                                     const std::vector<double>& eps_list, const DivergenceOptions& options) {
  if (n < 2) throw DomainError("divergence_profile: n must be >= 2");
  DivergenceProfile prof;
  double prev = eps0, total = 0.0;
  for (double eps : eps_list) {
    if (!(eps > 0.0 && eps < prev)) throw ValidationError("divergence_profile: eps_list must decrease inside (0, eps0)");
    DivergenceRow row;
    row.eps = eps;
    row.increment = integrate_profile(q_profile, n, eps, prev);
    total += row.increment;
    row.integral = total;
    row.slope = row.increment / std::log(prev / eps);
    prof.rows.push_back(row);
    prev = eps;
  }
  prof.verdict = classify_tail(prof.rows, options, &prof.tail_ratio);
  if (!prof.rows.empty()) prof.tail_slope = prof.rows.back().slope;
  return prof;
}

DivergenceProfile divergence_profile(const ChartedNeighborhood& nbhd, const ScalarField& q, double eps0,
                                     const std::vector<double>& eps_list, const SphereQuadrature& quad,
                                     const DivergenceOptions& options) {
  if (!(eps0 > 0.0 && eps0 < nbhd.radius())) throw DomainError("divergence_profile: eps0 outside the neighbourhood");
  return divergence_profile(mean_profile(nbhd, q, quad), nbhd.dim(), eps0, eps_list, options);
}

}  // namespace qmod
