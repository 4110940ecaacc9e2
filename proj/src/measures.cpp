#include "qmod/measures.hpp"

#include "qmod/quadrature.hpp"
#include "qmod/sampling.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <thread>

namespace qmod {

namespace {

double chart_distance(const Vec& y) { return hyperbolic_radius(y.norm()); }

void require_radius(const ChartedNeighborhood& nbhd, double r, const char* what, bool closed) {
  const bool ok = closed ? (r > 0.0 && r <= nbhd.radius()) : (r > 0.0 && r < nbhd.radius());
  if (!ok) throw DomainError(std::string(what) + ": radius outside the neighbourhood");
}

double sphere_sum(double rho, const ScalarField& q, const SphereQuadrature& quad) {
  double acc = 0.0;
  for (std::size_t k = 0; k < quad.nodes.size(); ++k) acc += quad.weights[k] * q(rho * quad.nodes[k]);
  return acc;
}

std::vector<double> chart_breaks(const ScalarField& q) {
  std::vector<double> out;
  for (double b : q.radial_breaks()) out.push_back(euclidean_radius(b));
  return out;
}

}  // namespace

ScalarField::ScalarField(Fn eval, std::string label, std::vector<double> radial_breaks)
    : eval_(std::move(eval)), label_(std::move(label)), breaks_(std::move(radial_breaks)) {
  if (!eval_) throw ValidationError("ScalarField: empty evaluator");
}

ScalarField ScalarField::pow(double p) const {
  auto f = eval_;
  return ScalarField([f, p](const Vec& y) {
    const double v = f(y);
    return v == 0.0 ? 0.0 : std::pow(v, p);
  }, label_ + "^" + std::to_string(p), breaks_);
}

ScalarField ScalarField::scaled(double c) const {
  auto f = eval_;
  return ScalarField([f, c](const Vec& y) { return c * f(y); }, label_, breaks_);
}

ScalarField ScalarField::constant(double c) {
  if (!(c >= 0.0)) throw ValidationError("ScalarField: constant must be nonnegative");
  return ScalarField([c](const Vec&) { return c; }, "constant");
}

ScalarField ScalarField::radial(std::function<double(double)> profile, std::string label,
                                std::vector<double> breaks) {
  return ScalarField([profile](const Vec& y) { return profile(chart_distance(y)); }, std::move(label),
                     std::move(breaks));
}

ScalarField ScalarField::radial_indicator(double a, double b) {
  if (!(0.0 <= a && a < b)) throw ValidationError("radial_indicator: need 0 <= a < b");
  return radial([a, b](double h) { return (h >= a && h < b) ? 1.0 : 0.0; }, "radial_indicator", {a, b});
}

ScalarField ScalarField::log_fmo(double c) {
  if (!(c > 0.0)) throw ValidationError("log_fmo: C must be positive");
  return radial([c](double h) { return std::max(0.0, std::log(c / h)); }, "log_fmo", {c});
}

ScalarField ScalarField::inverse_distance() {
  return radial([](double h) { return 1.0 / h; }, "inverse_distance");
}

ScalarField ScalarField::exp_inverse(double a) {
  if (!(a >= 0.0)) throw ValidationError("exp_inverse: a must be nonnegative");
  return radial([a](double h) { return std::exp(a / h); }, "exp_inverse");
}

ScalarField ScalarField::log_power(double c, int n) {
  if (!(c > 0.0) || n < 2) throw ValidationError("log_power: need C > 0 and n >= 2");
  return radial([c, n](double h) { return std::pow(std::max(0.0, std::log(c / h)), n - 1); }, "log_power", {c});
}

ScalarField ScalarField::affine(double c, const Vec& b) {
  if (b.norm() > c) throw ValidationError("affine: |b| > c makes the field negative in the unit ball");
  return ScalarField([c, b](const Vec& y) { return c + b.dot(y); }, "affine");
}

ScalarField ScalarField::from_json(const nlohmann::json& spec, int n) {
  if (!spec.is_object() || !spec.contains("kind") || !spec["kind"].is_string()) {
    throw ValidationError("field spec: object with string \"kind\" required");
  }
  const std::string kind = spec["kind"];
  auto num = [&](const char* key, double fallback) {
    if (!spec.contains(key)) return fallback;
    if (!spec[key].is_number()) throw ValidationError(std::string("field spec: \"") + key + "\" must be a number");
    return spec[key].get<double>();
  };
  if (kind == "constant") return constant(num("c", 1.0));
  if (kind == "radial_indicator") return radial_indicator(num("a", 0.0), num("b", 1.0));
  if (kind == "log_fmo") return log_fmo(num("C", 1.0));
  if (kind == "inverse_distance") return inverse_distance();
  if (kind == "exp_inverse") return exp_inverse(num("a", n - 1.0));
  if (kind == "log_power") return log_power(num("C", 1.0), n);
  if (kind == "affine") {
    Vec b = Vec::Zero(n);
    if (spec.contains("b")) {
      const auto& arr = spec["b"];
      if (!arr.is_array() || static_cast<int>(arr.size()) != n) throw ValidationError("field spec: \"b\" must have n entries");
      for (int i = 0; i < n; ++i) b(i) = arr[i].get<double>();
    }
    return affine(num("c", 1.0), b);
  }
  throw ValidationError("field spec: unknown kind \"" + kind + "\"");
}

ScalarField pullback(const std::function<double(const Vec&)>& ball_field, const ChartedNeighborhood& nbhd,
                     std::string label) {
  const ChartedNeighborhood chart = nbhd;
  return ScalarField([ball_field, chart](const Vec& y) { return ball_field(chart.chart_to_ball(y)); },
                     std::move(label));
}

SphereQuadrature SphereQuadrature::make(int n, std::uint64_t seed, std::size_t mc_nodes) {
  if (n < 2) throw DomainError("SphereQuadrature: n must be >= 2");
  SphereQuadrature q;
  const double area = unit_sphere_area(n);
  if (n == 2) {
    const int m = 256;
    for (int k = 0; k < m; ++k) {
      const double a = 2.0 * std::numbers::pi * k / m;
      Vec u(2);
      u << std::cos(a), std::sin(a);
      q.nodes.push_back(u);
      q.weights.push_back(area / m);
    }
  } else if (n == 3) {
    using Rule = boost::math::quadrature::gauss<double, 20>;
    const int azimuths = 40;
    std::vector<std::pair<double, double>> zs;
    for (std::size_t k = 0; k < Rule::abscissa().size(); ++k) {
      zs.emplace_back(-Rule::abscissa()[k], Rule::weights()[k]);
      zs.emplace_back(Rule::abscissa()[k], Rule::weights()[k]);
    }
    for (const auto& [z, wz] : zs) {
      const double s = std::sqrt(1.0 - z * z);
      for (int j = 0; j < azimuths; ++j) {
        const double phi = 2.0 * std::numbers::pi * (j + 0.5) / azimuths;
        Vec u(3);
        u << s * std::cos(phi), s * std::sin(phi), z;
        q.nodes.push_back(u);
        q.weights.push_back(wz * 2.0 * std::numbers::pi / azimuths);
      }
    }
  } else {
    Rng rng = make_stream(seed, 23);
    for (std::size_t k = 0; k < mc_nodes; ++k) {
      q.nodes.push_back(random_direction(n, rng));
      q.weights.push_back(area / static_cast<double>(mc_nodes));
    }
  }
  return q;
}

double SphereQuadrature::total_weight() const {
  double acc = 0.0;
  for (double w : weights) acc += w;
  return acc;
}

double sphere_integral(const ChartedNeighborhood& nbhd, double r, const ScalarField& q,
                       const SphereQuadrature& quad, ShellMeasure measure) {
  require_radius(nbhd, r, "sphere_integral", false);
  const int n = nbhd.dim();
  if (quad.dim() != n) throw ValidationError("sphere_integral: quadrature dimension mismatch");
  const double rho = euclidean_radius(r);
  double density = std::pow(rho, n - 1);
  if (measure == ShellMeasure::Hyperbolic) density *= std::pow(2.0 / (1.0 - rho * rho), n - 1);
  return density * sphere_sum(rho, q, quad);
}

double shell_integral(const ChartedNeighborhood& nbhd, double r0, const ScalarField& q,
                      const SphereQuadrature& quad, ShellMeasure measure) {
  require_radius(nbhd, r0, "shell_integral", true);
  const int n = nbhd.dim();
  auto integrand = [&](double r) {
    const double rho = euclidean_radius(r);
    double density = std::pow(rho, n - 1);
    if (measure == ShellMeasure::Hyperbolic) density *= std::pow(2.0 / (1.0 - rho * rho), n - 1);
    return density * sphere_sum(rho, q, quad);
  };
  return integrate_adaptive(integrand, 0.0, r0, q.radial_breaks(), 1e-12).value;
}

MonteCarloEstimate ball_integral(const ChartedNeighborhood& nbhd, double r0, const ScalarField& q,
                                 std::size_t budget, std::uint64_t seed, unsigned threads) {
  require_radius(nbhd, r0, "ball_integral", true);
  if (budget == 0) throw ValidationError("ball_integral: budget must be positive");
  const int n = nbhd.dim();
  const double rho0 = euclidean_radius(r0);
  const double ball_volume = unit_sphere_area(n) / n * std::pow(rho0, n);
  const std::size_t strata = std::clamp<std::size_t>(budget / 16, 1, 256);

  std::vector<double> mean(strata, 0.0), var(strata, 0.0);
  std::vector<std::size_t> count(strata, budget / strata);
  for (std::size_t j = 0; j < budget % strata; ++j) ++count[j];

  auto run = [&](std::size_t j) {
    Rng rng = make_stream(seed, j);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t k = 0; k < count[j]; ++k) {
      const double s = (static_cast<double>(j) + unif(rng)) / static_cast<double>(strata);
      const double rho = rho0 * std::pow(s, 1.0 / n);
      const Vec x = rho * random_direction(n, rng);
      const double f = ball_volume * std::pow(2.0 / (1.0 - rho * rho), n) * q(x);
      sum += f;
      sum2 += f * f;
    }
    const double c = static_cast<double>(count[j]);
    mean[j] = sum / c;
    var[j] = count[j] > 1 ? std::max(0.0, (sum2 - c * mean[j] * mean[j]) / (c - 1.0)) : 0.0;
  };

  threads = std::max(1u, threads);
  if (threads == 1) {
    for (std::size_t j = 0; j < strata; ++j) run(j);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t j = t; j < strata; j += threads) run(j);
      });
    }
    for (auto& th : pool) th.join();
  }

  MonteCarloEstimate est;
  double v = 0.0;
  for (std::size_t j = 0; j < strata; ++j) {
    est.value += mean[j] / static_cast<double>(strata);
    v += var[j] / (static_cast<double>(count[j]) * static_cast<double>(strata * strata));
  }
  est.stderr_ = std::sqrt(v);
  est.samples = budget;
  return est;
}

double volume_integral(const ChartedNeighborhood& nbhd, double r0, const ScalarField& q,
                       const SphereQuadrature& quad) {
  require_radius(nbhd, r0, "volume_integral", true);
  const int n = nbhd.dim();
  const double rho0 = euclidean_radius(r0);
  auto integrand = [&](double rho) {
    return std::pow(2.0, n) * std::pow(rho, n - 1) / std::pow(1.0 - rho * rho, n) * sphere_sum(rho, q, quad);
  };
  return integrate_towards_zero(integrand, rho0, chart_breaks(q));
}

double fubini_constant(int n, double r0) {
  const double rho0 = euclidean_radius(r0);
  return 1.0 / (2.0 * std::pow(1.0 - rho0 * rho0, n - 1));
}

FubiniReport fubini_sandwich(const ChartedNeighborhood& nbhd, double r0, const ScalarField& q,
                             const SphereQuadrature& quad, std::size_t budget, std::uint64_t seed,
                             unsigned threads) {
  const int n = nbhd.dim();
  FubiniReport rep;
  const auto mc = ball_integral(nbhd, r0, q, budget, seed, threads);
  rep.volume = mc.value;
  rep.volume_stderr = mc.stderr_;
  rep.shell_euclidean = shell_integral(nbhd, r0, q, quad, ShellMeasure::Euclidean);
  rep.shell_hyperbolic = shell_integral(nbhd, r0, q, quad, ShellMeasure::Hyperbolic);
  rep.lower = std::pow(2.0, n - 1);
  rep.upper = std::pow(2.0, n) * fubini_constant(n, r0);
  if (rep.volume == 0.0 && rep.shell_euclidean == 0.0) {
    rep.degenerate = true;
    rep.in_bracket = true;
    rep.ratio = rep.ratio_hyperbolic = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  rep.ratio = rep.volume / rep.shell_euclidean;
  rep.ratio_hyperbolic = rep.volume / rep.shell_hyperbolic;
  rep.relative_error = rep.volume_stderr / rep.volume;
  rep.in_bracket = rep.ratio >= rep.lower && rep.ratio <= rep.upper;
  return rep;
}

QStats q_stats(const ChartedNeighborhood& nbhd, double r, const ScalarField& q, const SphereQuadrature& quad) {
  const int n = nbhd.dim();
  const double omega = unit_sphere_area(n);
  const double norm_const = omega * std::pow(r, n - 1);
  QStats s;
  s.q_mean = sphere_integral(nbhd, r, q, quad) / norm_const;
  const double power_integral = sphere_integral(nbhd, r, q.pow(n - 1), quad);
  s.q_norm = std::pow(power_integral, 1.0 / (n - 1));
  s.q_tilde = power_integral / norm_const;
  const double lhs = 1.0 / s.q_norm;
  const double rhs = std::pow(omega, -1.0 / (n - 1)) / (r * std::pow(s.q_tilde, 1.0 / (n - 1)));
  s.identity_residual = std::isfinite(lhs) && lhs != 0.0 ? std::abs(lhs - rhs) / std::abs(lhs) : 0.0;
  return s;
}

FmoProfile fmo_profile(const ChartedNeighborhood& nbhd, const ScalarField& q, const std::vector<double>& eps_list,
                       const SphereQuadrature& quad) {
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    require_radius(nbhd, eps_list[k], "fmo_profile", true);
    if (k > 0 && !(eps_list[k] < eps_list[k - 1])) throw ValidationError("fmo_profile: eps_list must decrease");
  }
  FmoProfile prof;
  const auto one = ScalarField::constant(1.0);
  std::vector<double> osc;
  for (double eps : eps_list) {
    const double vol = volume_integral(nbhd, eps, one, quad);
    const double mean = volume_integral(nbhd, eps, q, quad) / vol;
    const ScalarField dev([&q, mean](const Vec& y) { return std::abs(q(y) - mean); }, "deviation",
                          q.radial_breaks());
    FmoRow row{eps, mean, volume_integral(nbhd, eps, dev, quad) / vol};
    prof.rows.push_back(row);
    osc.push_back(row.oscillation);
  }
  if (!osc.empty()) {
    prof.max_oscillation = *std::max_element(osc.begin(), osc.end());
    std::vector<double> sorted = osc;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    prof.median_oscillation = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    prof.bounded = prof.max_oscillation <= 2.0 * prof.median_oscillation || prof.max_oscillation == 0.0;
  }
  return prof;
}

}  // namespace qmod
