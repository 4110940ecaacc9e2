#include "qmod/example_family.hpp"

#include "qmod/sampling.hpp"

#include <algorithm>

namespace qmod {

namespace {

double inner_scale(int m) {
  const double k = static_cast<double>(m) / (m - 1);
  return k * std::log(std::exp(1.0) * k);
}

Vec inner_image(const ExampleFamilyConfig& cfg, const Vec& y) { return inner_scale(cfg.m) * y; }

Vec outer_image(const ExampleFamilyConfig& cfg, const Vec& y) {
  const double s = y.norm();
  return cfg.r0_prime * std::log(std::exp(1.0) * cfg.r0_prime / s) / s * y;
}

}  // namespace

ExampleFamilyConfig ExampleFamilyConfig::make(int n, int m, double r0, GroupRef group) {
  if (n < 2) throw ValidationError("ExampleFamilyConfig: n must be >= 2");
  ExampleFamilyConfig cfg;
  cfg.n = n;
  cfg.m = m;
  cfg.group = group ? std::move(group) : std::make_shared<const DiscreteGroup>(DiscreteGroup::trivial(n));
  if (cfg.group->dim() != n) throw ValidationError("ExampleFamilyConfig: group dimension mismatch");
  const double normal = normal_radius(*cfg.group, Vec::Zero(n));
  cfg.r0 = r0 > 0.0 ? r0 : normal;
  if (cfg.r0 > normal) throw ValidationError("ExampleFamilyConfig: r0 exceeds the normal radius at p0");
  cfg.r0_prime = euclidean_radius(cfg.r0);
  cfg.validate();
  return cfg;
}

void ExampleFamilyConfig::validate() const {
  if (m < 2) throw ValidationError("ExampleFamilyConfig: m must be >= 2");
  if (!(r0 > 0.0)) throw ValidationError("ExampleFamilyConfig: r0 must be positive");
  if (!(r0_prime > 0.0 && r0_prime < 1.0)) throw ValidationError("ExampleFamilyConfig: r0' must lie in (0, 1)");
  const double expected = (std::exp(r0) - 1.0) / (std::exp(r0) + 1.0);
  if (std::abs(r0_prime - expected) > 1e-14) throw ValidationError("ExampleFamilyConfig: r0' inconsistent with r0");
}

double ExampleFamilyConfig::gluing_radius() const { return r0_prime * (m - 1.0) / m; }

ChartedNeighborhood ExampleFamilyConfig::neighborhood() const {
  return ChartedNeighborhood(group, Vec::Zero(n), r0);
}

GmEval gm_family_eval(const ExampleFamilyConfig& cfg, const Vec& y) {
  if (y.size() != cfg.n) throw ValidationError("gm_family_eval: dimension mismatch");
  const double s = y.norm();
  if (s > cfg.r0_prime * (1.0 + 1e-15)) throw DomainError("gm_family_eval: |y| exceeds r0'");
  GmEval out;
  if (s <= cfg.gluing_radius()) {
    const double c = inner_scale(cfg.m);
    out.branch = Branch::Inner;
    out.image = c * y;
    out.norm_closed = c;
    out.jac_closed = std::pow(c, cfg.n);
  } else {
    const double ratio = cfg.r0_prime / s;
    const double l = std::log(std::exp(1.0) * ratio);
    out.branch = Branch::Outer;
    out.image = outer_image(cfg, y);
    out.norm_closed = ratio * l;
    out.jac_closed = std::pow(ratio, cfg.n) * std::pow(l, cfg.n - 1);
  }
  return out;
}

Mat gm_family_derivative(const ExampleFamilyConfig& cfg, const Vec& y) {
  const double s = y.norm();
  if (s > cfg.r0_prime * (1.0 + 1e-15)) throw DomainError("gm_family_derivative: |y| exceeds r0'");
  const Mat eye = Mat::Identity(cfg.n, cfg.n);
  if (s <= cfg.gluing_radius()) return inner_scale(cfg.m) * eye;
  const Vec u = y / s;
  const Mat radial = u * u.transpose();
  const double tangential = cfg.r0_prime * std::log(std::exp(1.0) * cfg.r0_prime / s) / s;
  return -(cfg.r0_prime / s) * radial + tangential * (eye - radial);
}

MapSample gm_map_sample(const ExampleFamilyConfig& cfg) {
  MapSample ms;
  ms.f = [cfg](const Vec& y) { return gm_family_eval(cfg, y).image; };
  ms.derivative = [cfg](const Vec& y) { return gm_family_derivative(cfg, y); };
  ms.domain_tag = "chart B(0, r0')";
  return ms;
}

double gm_distortion_bound(const ExampleFamilyConfig& cfg, const Vec& y) {
  return std::pow(std::log(std::exp(1.0) * cfg.r0_prime / y.norm()), cfg.n - 1);
}

ScalarField q1_field(const ExampleFamilyConfig& cfg, double c1_star) {
  return ScalarField::log_power(std::exp(1.0) * cfg.r0_prime * c1_star, cfg.n);
}

DistortionReport example_distortion_check(const ExampleFamilyConfig& cfg, std::size_t sample_count,
                                          std::uint64_t seed, const SphereQuadrature& quad) {
  if (sample_count == 0) throw ValidationError("example_distortion_check: need samples");
  cfg.validate();
  const int n = cfg.n;
  const double rg = cfg.gluing_radius();
  DistortionReport rep;

  const auto mc = estimate_metric_comparison(n, cfg.r0, 30000, seed);
  rep.c1 = mc.c1;
  rep.c1_star = 1.0 / mc.c1;
  rep.big_c = std::exp(1.0) * cfg.r0_prime * rep.c1_star;

  Rng rng = make_stream(seed, 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t k = 0; k < sample_count; ++k) {
    Vec y;
    if (k % 2 == 0) {
      y = uniform_in_ball(n, cfg.r0_prime, rng);
    } else {
      const double a = std::pow(rg, n), b = std::pow(cfg.r0_prime, n);
      y = std::pow(a + (b - a) * unif(rng), 1.0 / n) * random_direction(n, rng);
    }
    if (y.norm() == 0.0) continue;
    const auto ev = gm_family_eval(cfg, y);
    const double k_o = std::pow(ev.norm_closed, n) / ev.jac_closed;
    const double q = gm_distortion_bound(cfg, y);
    rep.max_excess = std::max(rep.max_excess, std::pow(k_o, n - 1) - q);
    if (ev.branch == Branch::Outer) {
      ++rep.annulus_samples;
      rep.max_annulus_gap =
          std::max(rep.max_annulus_gap, std::abs(k_o - std::log(std::exp(1.0) * cfg.r0_prime / y.norm())));
    } else {
      rep.min_inner_q = std::min(rep.min_inner_q, q);
      if (q < 1.0) ++rep.inner_q_below_one;
    }
    const double q1 = std::pow(std::max(0.0, std::log(rep.big_c / hyperbolic_radius(y.norm()))), n - 1);
    if (q > q1 * (1.0 + 1e-12)) ++rep.q_above_q1;
    ++rep.samples;
  }

  for (int k = 0; k < 1000; ++k) {
    const Vec y = rg * random_direction(n, rng);
    rep.gluing_mismatch = std::max(rep.gluing_mismatch, (inner_image(cfg, y) - outer_image(cfg, y)).norm());
  }

  const auto nbhd = cfg.neighborhood();
  const auto q1 = q1_field(cfg, rep.c1_star);
  const int radii = 200;
  for (int k = 1; k <= radii; ++k) {
    const double r = cfg.r0 * k / (radii + 1.0);
    const double q_star = q_stats(nbhd, r, q1, quad).q_mean;
    const double denom = std::pow(std::log(rep.big_c / r), n - 1);
    rep.eq33_c1_hat = std::max(rep.eq33_c1_hat, q_star / denom);
  }
  rep.eq33_c1_bound = std::pow(std::sinh(cfg.r0) / cfg.r0, n - 1);

  rep.distortion_bound = rep.max_excess <= 1e-9 && rep.inner_q_below_one == 0;
  rep.q1_dominates = rep.q_above_q1 == 0;
  rep.eq33_bound = std::isfinite(rep.eq33_c1_hat) && rep.eq33_c1_hat <= rep.eq33_c1_bound * (1.0 + 1e-9);
  return rep;
}

RadialProfileReport radial_profile_check(const ExampleFamilyConfig& cfg, int points) {
  if (points < 3) throw ValidationError("radial_profile_check: need >= 3 points");
  const double rg = cfg.gluing_radius();
  std::vector<double> s, v;
  for (int k = 0; k < points; ++k) s.push_back(cfg.r0_prime * k / (points - 1.0));
  s.push_back(rg);
  std::sort(s.begin(), s.end());
  Vec e1 = Vec::Zero(cfg.n);
  e1(0) = 1.0;
  for (double t : s) v.push_back(gm_family_eval(cfg, t * e1).image.norm());

  RadialProfileReport rep;
  rep.inner_increasing = rep.outer_decreasing = rep.strictly_increasing = true;
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (!(s[k] > s[k - 1])) continue;
    if (!(v[k] > v[k - 1])) rep.strictly_increasing = false;
    if (s[k] <= rg && !(v[k] > v[k - 1])) rep.inner_increasing = false;
    if (s[k - 1] >= rg && !(v[k] < v[k - 1])) rep.outer_decreasing = false;
  }
  rep.max_image_radius = *std::max_element(v.begin(), v.end());
  rep.boundary_value = v.back();
  rep.continuous = std::abs(inner_image(cfg, rg * e1).norm() - outer_image(cfg, rg * e1).norm()) < 1e-12;
  return rep;
}

EquicontinuityProfile equicontinuity_profile(int n, double r0, const std::vector<int>& m_list,
                                             const std::vector<double>& delta_list, int radial_points,
                                             std::size_t directions, std::uint64_t seed) {
  if (m_list.empty()) throw ValidationError("equicontinuity_profile: empty m list");
  if (radial_points < 2) throw ValidationError("equicontinuity_profile: need >= 2 radial points");
  std::vector<ExampleFamilyConfig> cfgs;
  for (int m : m_list) cfgs.push_back(ExampleFamilyConfig::make(n, m, r0));
  const double r0p = cfgs.front().r0_prime;

  Rng rng = make_stream(seed, 5);
  std::vector<Vec> dirs;
  for (std::size_t k = 0; k < std::max<std::size_t>(1, directions); ++k) dirs.push_back(random_direction(n, rng));

  // sup over |x| < rho of |g(x) - g(0)| for one member.
  auto sup_displacement = [&](const ExampleFamilyConfig& cfg, double rho) {
    std::vector<double> radii;
    const double top = rho * (1.0 - 1e-12);
    for (int k = 0; k < radial_points; ++k) radii.push_back(top * k / (radial_points - 1.0));
    if (cfg.gluing_radius() < top) radii.push_back(cfg.gluing_radius());
    const Vec g0 = gm_family_eval(cfg, Vec::Zero(n)).image;
    double best = 0.0;
    for (const auto& u : dirs)
      for (double s : radii) best = std::max(best, (gm_family_eval(cfg, s * u).image - g0).norm());
    return best;
  };

  EquicontinuityProfile prof;
  double prev_delta = std::numeric_limits<double>::infinity();
  const double lipschitz = 2.0 * std::log(2.0 * std::exp(1.0));
  prof.nonincreasing = true;
  prof.within_bound = true;
  for (double delta : delta_list) {
    if (!(delta >= 0.0 && delta < prev_delta)) throw ValidationError("equicontinuity_profile: delta list must decrease");
    if (delta > r0) throw DomainError("equicontinuity_profile: delta exceeds r0");
    prev_delta = delta;
    EquicontinuityRow row;
    row.delta = delta;
    row.rho_delta = std::min(euclidean_radius(delta), r0p);
    row.bound = lipschitz * row.rho_delta;
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
      const double d = delta == 0.0 ? 0.0 : sup_displacement(cfgs[i], row.rho_delta);
      if (i == 0 || d > row.displacement) {
        row.displacement = d;
        row.argmax_m = m_list[i];
      }
    }
    if (!prof.rows.empty() && row.displacement > prof.rows.back().displacement) prof.nonincreasing = false;
    if (row.displacement > row.bound + 1e-9) prof.within_bound = false;
    prof.rows.push_back(row);
  }

  const double rho_star = euclidean_radius(0.5 * r0);
  for (const auto& cfg : cfgs) prof.restricted_image_radius = std::max(prof.restricted_image_radius, sup_displacement(cfg, rho_star));
  prof.continuum_radius = 0.5 * (prof.restricted_image_radius + 1.0);
  prof.continuum_omitted = prof.restricted_image_radius < 1.0;
  prof.continuum_diameter = prof.continuum_omitted ? 2.0 * prof.continuum_radius : 0.0;
  return prof;
}

}  // namespace qmod
