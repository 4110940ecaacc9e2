#include "qmod/runner.hpp"

#include "qmod/distortion.hpp"
#include "qmod/example_family.hpp"
#include "qmod/geometry.hpp"
#include "qmod/measures.hpp"
#include "qmod/mobius.hpp"
#include "qmod/modulus.hpp"
#include "qmod/sampling.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace qmod {

using nlohmann::json;

namespace {

double round12(double v) {
  if (!std::isfinite(v)) return v;
  return std::stod(format_number(v));
}

std::string cell(double v) { return format_number(v); }
std::string cell(bool v) { return v ? "true" : "false"; }
std::string cell(const std::string& v) { return v; }
std::string cell(std::size_t v) { return std::to_string(v); }
std::string cell(int v) { return std::to_string(v); }

template <class... Ts>
std::vector<std::string> row(const Ts&... vals) {
  return {cell(vals)...};
}

json num(double v) { return std::isfinite(v) ? json(round12(v)) : json(format_number(v)); }

// Typed access to the config with key whitelisting.
class Config {
 public:
  Config(const json& doc, std::set<std::string> allowed) : doc_(doc) {
    allowed.insert({"command", "n", "seed", "output", "group", "center", "radius", "threads"});
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      if (!allowed.count(it.key())) throw ValidationError("config: unknown key \"" + it.key() + "\"");
    }
  }

  bool has(const char* key) const { return doc_.contains(key); }
  const json& raw(const char* key) const { return doc_.at(key); }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    if (!doc_[key].is_number()) throw ValidationError(std::string("config: \"") + key + "\" must be a number");
    return doc_[key].get<double>();
  }
  double number(const char* key) const {
    if (!has(key)) throw ValidationError(std::string("config: missing \"") + key + "\"");
    return number(key, 0.0);
  }
  long integer(const char* key, long fallback) const {
    if (!has(key)) return fallback;
    if (!doc_[key].is_number_integer()) throw ValidationError(std::string("config: \"") + key + "\" must be an integer");
    return doc_[key].get<long>();
  }
  std::vector<double> numbers(const char* key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const auto& a = doc_[key];
    if (!a.is_array() || a.empty()) throw ValidationError(std::string("config: \"") + key + "\" must be a nonempty array");
    std::vector<double> out;
    for (const auto& v : a) {
      if (!v.is_number()) throw ValidationError(std::string("config: \"") + key + "\" must hold numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }
  std::string string(const char* key, std::string fallback) const {
    if (!has(key)) return fallback;
    if (!doc_[key].is_string()) throw ValidationError(std::string("config: \"") + key + "\" must be a string");
    return doc_[key].get<std::string>();
  }
  std::optional<bool> boolean(const char* key) const {
    if (!has(key)) return std::nullopt;
    if (!doc_[key].is_boolean()) throw ValidationError(std::string("config: \"") + key + "\" must be a boolean");
    return doc_[key].get<bool>();
  }

 private:
  const json& doc_;
};

struct Context {
  int n = 2;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  GroupRef group;
  std::string group_path;
  Vec center;
  double normal = 0.0;
};

Context make_context(const Config& cfg, const json& doc, const RunOptions& opt) {
  Context ctx;
  const long n = cfg.integer("n", 2);
  if (n < 2 || n > 8) throw ValidationError("config: n must lie in [2, 8]");
  ctx.n = static_cast<int>(n);
  const long seed = cfg.integer("seed", 1);
  if (seed < 0) throw ValidationError("config: seed must be nonnegative");
  ctx.seed = opt.seed ? *opt.seed : static_cast<std::uint64_t>(seed);
  ctx.threads = std::max(1u, opt.threads);
  if (cfg.has("group")) {
    std::filesystem::path p = cfg.string("group", "");
    if (p.is_relative()) p = opt.config_dir / p;
    ctx.group_path = p.string();
    auto g = load_group_definition(p);
    if (g.dim() != ctx.n) throw ValidationError("config: group dimension differs from n");
    ctx.group = std::make_shared<const DiscreteGroup>(std::move(g));
  } else {
    ctx.group = std::make_shared<const DiscreteGroup>(DiscreteGroup::trivial(ctx.n));
  }
  ctx.center = Vec::Zero(ctx.n);
  if (cfg.has("center")) {
    const auto& c = doc.at("center");
    if (!c.is_array() || static_cast<int>(c.size()) != ctx.n) throw ValidationError("config: center must have n entries");
    for (int i = 0; i < ctx.n; ++i) ctx.center(i) = c[i].get<double>();
    if (!(ctx.center.norm() < 1.0)) throw ValidationError("config: center must lie inside the unit ball");
  }
  ctx.normal = normal_radius(*ctx.group, ctx.center);
  return ctx;
}

ChartedNeighborhood neighborhood(const Context& ctx, double radius) {
  if (!(radius > 0.0 && radius <= ctx.normal)) {
    throw ValidationError("config: radius " + format_number(radius) + " outside (0, normal radius " +
                          format_number(ctx.normal) + "]");
  }
  return ChartedNeighborhood(ctx.group, ctx.center, radius);
}

void require_decreasing(const std::vector<double>& v, double upper, const char* what) {
  double prev = upper;
  for (double x : v) {
    if (!(x > 0.0 && x < prev)) throw ValidationError(std::string("config: \"") + what + "\" must decrease inside (0, " + format_number(upper) + ")");
    prev = x;
  }
}

std::vector<double> halving(double start, int count) {
  std::vector<double> out;
  for (int k = 1; k <= count; ++k) out.push_back(start * std::ldexp(1.0, -k));
  return out;
}

// Q1 for the example family needs the empirical metric-comparison constant.
ScalarField field_from(const json& spec, const Context& ctx, double r0, json* extra = nullptr) {
  if (spec.is_object() && spec.value("kind", "") == "q1") {
    const double c1 = estimate_metric_comparison(ctx.n, r0, 30000, ctx.seed).c1;
    const double c = std::exp(1.0) * euclidean_radius(r0) / c1;
    if (extra) (*extra)["q1_C"] = num(c);
    return ScalarField::log_power(c, ctx.n);
  }
  return ScalarField::from_json(spec, ctx.n);
}

RunResult verify_fubini(const Config& cfg, const Context& ctx) {
  RunResult res;
  const auto radii = cfg.numbers("r0_list", {0.25, 0.5});
  const double rmax = *std::max_element(radii.begin(), radii.end());
  const auto nbhd = neighborhood(ctx, rmax);
  const long budget = cfg.integer("budget", 200000);
  if (budget <= 0) throw ValidationError("config: budget must be positive");
  std::vector<json> specs;
  if (cfg.has("fields")) {
    for (const auto& f : cfg.raw("fields")) specs.push_back(f);
  } else {
    specs = {json{{"kind", "constant"}, {"c", 1.0}}, json{{"kind", "radial_indicator"}, {"a", 0.1}, {"b", 0.2}},
             json{{"kind", "log_fmo"}, {"C", 1.0}}};
  }
  const auto quad = SphereQuadrature::make(ctx.n, ctx.seed);
  res.header = {"field", "r0", "volume", "stderr", "shell_euclidean", "shell_hyperbolic", "ratio",
                "ratio_hyperbolic", "lower", "upper", "in_bracket"};
  double c_lo = std::numeric_limits<double>::infinity(), c_hi = 0.0, worst_err = 0.0;
  bool bracket = true;
  for (const auto& spec : specs) {
    const auto q = field_from(spec, ctx, rmax);
    for (double r0 : radii) {
      if (!(r0 > 0.0 && r0 <= nbhd.radius())) throw ValidationError("config: r0 outside the neighbourhood");
      const auto rep = fubini_sandwich(nbhd, r0, q, quad, static_cast<std::size_t>(budget), ctx.seed, ctx.threads);
      res.rows.push_back(row(q.label(), r0, rep.volume, rep.volume_stderr, rep.shell_euclidean,
                             rep.shell_hyperbolic, rep.ratio, rep.ratio_hyperbolic, rep.lower, rep.upper,
                             rep.in_bracket));
      bracket = bracket && rep.in_bracket;
      if (!rep.degenerate) {
        c_lo = std::min(c_lo, rep.ratio);
        c_hi = std::max(c_hi, rep.ratio);
        worst_err = std::max(worst_err, rep.relative_error);
      }
    }
  }
  res.summary["empirical_constants"] = {{"C1_hat", num(c_hi)}, {"C2_hat", num(c_lo)},
                                        {"note", "valid for the tested field battery only"}};
  res.summary["outputs"] = {{"max_relative_error", num(worst_err)}};
  res.summary["pass_flags"] = {{"in_bracket", bracket}, {"monte_carlo_error_below_1pct", worst_err < 0.01}};
  return res;
}

RunResult ring_modulus(const Config& cfg, const Context& ctx) {
  RunResult res;
  const double r1 = cfg.number("r1", 1.0), r2 = cfg.number("r2", std::exp(1.0));
  if (!(0.0 < r1 && r1 < r2)) throw ValidationError("config: need 0 < r1 < r2");
  const double outer = cfg.number("outer_radius", 0.5);
  if (!(outer > 0.0 && outer < 1.0)) throw ValidationError("config: outer_radius must lie in (0, 1)");
  const std::string metric_name = cfg.string("metric", "euclidean");
  if (metric_name != "euclidean" && metric_name != "hyperbolic") throw ValidationError("config: metric must be euclidean or hyperbolic");
  const MetricTag metric = metric_name == "euclidean" ? MetricTag::Euclidean : MetricTag::Hyperbolic;
  const long dirs = cfg.integer("directions", ctx.n == 2 ? 512 : ctx.n == 3 ? 2048 : 4096);
  const long cells = cfg.integer("cells", ctx.n == 2 ? 256 : 128);
  if (dirs <= 0 || cells <= 0) throw ValidationError("config: directions and cells must be positive");
  const double rho2 = outer, rho1 = outer * r1 / r2;
  const double hw = rho2 * (1.0 + 1e-9);
  long bundle = cfg.integer("bundle_size", 0);
  if (bundle < 0) throw ValidationError("config: bundle_size must be nonnegative");
  if (bundle == 0) bundle = static_cast<long>(default_bundle_size(ctx.n, rho2, hw, static_cast<int>(cells), dirs));
  const double tolerance = cfg.number("tolerance", ctx.n == 2 ? 0.05 : 0.08);
  const auto family = radial_ring_family(ctx.n, rho1, rho2, static_cast<std::size_t>(dirs), metric,
                                         static_cast<std::size_t>(bundle));
  ModulusOptions mopt;
  mopt.tol = cfg.number("solver_tol", 1e-6);
  const auto sol = modulus_solve(GridBox::cube(ctx.n, hw, static_cast<int>(cells)), family, ctx.n, mopt);
  const double analytic = ring_modulus_exact(r1, r2, ctx.n);
  const double rel = sol.value / analytic - 1.0;
  res.header = {"n", "r1", "r2", "rho1", "rho2", "metric", "directions", "bundle_size", "cells", "analytic",
                "solver", "dual_bound", "rel_error"};
  res.rows.push_back(row(ctx.n, r1, r2, rho1, rho2, metric_name, static_cast<std::size_t>(dirs),
                         static_cast<std::size_t>(bundle), static_cast<int>(cells), analytic, sol.value,
                         sol.certificate.dual_bound, rel));
  json cert = to_json(sol.certificate);
  for (auto& [k, v] : cert.items())
    if (v.is_number_float()) v = num(v.get<double>());
  res.summary["outputs"] = {{"analytic", num(analytic)}, {"solver", num(sol.value)}, {"rel_error", num(rel)},
                            {"certificate", cert}};
  res.summary["pass_flags"] = {{"within_tolerance", std::abs(rel) <= tolerance}};
  return res;
}

std::function<Vec(const Vec&)> chart_map_from(const Config& cfg, const Context& ctx, double r0) {
  if (!cfg.has("map")) return [](const Vec& y) { return y; };
  const auto& m = cfg.raw("map");
  if (m.is_string() && m.get<std::string>() == "identity") return [](const Vec& y) { return y; };
  if (m.is_object() && m.value("kind", "") == "example7") {
    if (!m.contains("m") || !m["m"].is_number_integer()) throw ValidationError("config: map.m must be an integer");
    const auto fam = ExampleFamilyConfig::make(ctx.n, m["m"].get<int>(), r0, ctx.group);
    return [fam](const Vec& y) { return gm_family_eval(fam, y).image; };
  }
  throw ValidationError("config: map must be \"identity\" or {\"kind\":\"example7\",\"m\":int}");
}

RunResult ring_inequality(const Config& cfg, const Context& ctx) {
  RunResult res;
  const double r1 = cfg.number("r1", 0.1), r2 = cfg.number("r2", 0.5);
  const auto nbhd = neighborhood(ctx, cfg.number("radius", r2));
  if (!(0.0 < r1 && r1 < r2 && r2 <= nbhd.radius())) throw ValidationError("config: need 0 < r1 < r2 <= radius");
  const auto quad = SphereQuadrature::make(ctx.n, ctx.seed);
  json extra;
  const auto q = field_from(cfg.has("field") ? cfg.raw("field") : json{{"kind", "constant"}, {"c", 1.0}}, ctx,
                            nbhd.radius(), &extra);
  const auto map = chart_map_from(cfg, ctx, nbhd.radius());
  RingOptions ropt;
  ropt.directions = static_cast<std::size_t>(cfg.integer("directions", 0));
  ropt.bundle_size = static_cast<std::size_t>(cfg.integer("bundle_size", 0));
  ropt.cells = static_cast<int>(cfg.integer("cells", 0));
  ropt.discretization_tol = cfg.number("discretization_tol", 0.05);

  const auto eta0 = eta0_weight(mean_profile(nbhd, q, quad), r1, r2, ctx.n);
  if (eta0.degenerate) throw ValidationError("config: I is infinite for this field, eta0 degenerate");
  const auto battery = eta_battery(eta0);
  const std::string eta_name = cfg.string("eta", "eta0");
  const LabelledEta* chosen = nullptr;
  for (const auto& b : battery)
    if (b.label == eta_name) chosen = &b;
  if (!chosen) throw ValidationError("config: eta must be eta0, uniform or triangular");

  const auto ring = ring_inequality_check(nbhd, map, q, r1, r2, chosen->eta, quad, ropt);
  const std::vector<ScalarField> cbattery{ScalarField::constant(1.0), q, ScalarField::radial_indicator(r1, r2)};
  const auto constants = extremal_constants(nbhd, r2, cbattery, quad);
  const auto sandwich = extremal_sandwich(nbhd, q, r1, r2, constants, quad);

  res.header = {"eta", "eta_integral", "sandwich_lhs", "sandwich_middle", "sandwich_right", "ordered", "ring_rhs"};
  bool ordered = true;
  for (std::size_t k = 0; k < sandwich.size(); ++k) {
    const auto& s = sandwich[k];
    const double rhs = weighted_ring_integral(nbhd, q, r1, r2, battery[k].eta, quad);
    res.rows.push_back(row(s.eta_label, s.eta_integral, s.lhs, s.middle, s.right, s.ordered, rhs));
    ordered = ordered && s.ordered;
  }
  json cert = to_json(ring.certificate);
  for (auto& [k, v] : cert.items())
    if (v.is_number_float()) v = num(v.get<double>());
  res.summary["outputs"] = {{"eta", eta_name},
                            {"lhs_modulus", num(ring.lhs)},
                            {"rhs", num(ring.rhs)},
                            {"margin", num(ring.margin)},
                            {"strict_pass", ring.strict_pass},
                            {"I", num(ring.i_value)},
                            {"omega_over_I_pow", num(ring.lhs_closed)},
                            {"directions", ring.directions},
                            {"bundle_size", ring.bundle_size},
                            {"cells", ring.cells},
                            {"certificate", cert}};
  res.summary["empirical_constants"] = {{"C1_hat", num(constants.c1_hat)}, {"C2_hat", num(constants.c2_hat)},
                                        {"M1_hat", num(constants.m1_hat)}, {"M2_hat", num(constants.m2_hat)}};
  for (auto& [k, v] : extra.items()) res.summary["empirical_constants"][k] = v;
  res.summary["pass_flags"] = {{"ring_inequality", ring.pass}, {"sandwich_ordered", ordered}};
  return res;
}

RunResult lower_bound(const Config& cfg, const Context& ctx) {
  RunResult res;
  const double eps0 = cfg.number("eps0", 0.5);
  const auto nbhd = neighborhood(ctx, cfg.number("radius", eps0));
  const auto eps_list = cfg.numbers("eps_list", halving(eps0, 10));
  require_decreasing(eps_list, eps0, "eps_list");
  const auto quad = SphereQuadrature::make(ctx.n, ctx.seed);
  json extra;
  const auto q = field_from(cfg.has("field") ? cfg.raw("field") : json{{"kind", "constant"}, {"c", 1.0}}, ctx,
                            nbhd.radius(), &extra);
  res.header = {"eps", "value", "value_mean_form", "residual"};
  double worst = 0.0;
  for (double eps : eps_list) {
    const auto lb = lower_bound_integral(nbhd, q, eps, eps0, quad);
    res.rows.push_back(row(eps, lb.value, lb.value_mean_form, lb.residual));
    worst = std::max(worst, lb.residual);
  }
  res.summary["outputs"] = {{"max_residual", num(worst)}};
  res.summary["empirical_constants"] = extra;
  res.summary["pass_flags"] = {{"forms_agree", worst < 1e-6}};
  return res;
}

RunResult divergence(const Config& cfg, const Context& ctx) {
  RunResult res;
  const double eps0 = cfg.number("eps0", 0.5);
  const auto eps_list = cfg.numbers("eps_list", halving(eps0, 40));
  require_decreasing(eps_list, eps0, "eps_list");
  DivergenceOptions dopt;
  dopt.threshold_slope = cfg.number("threshold_slope", dopt.threshold_slope);
  DivergenceProfile prof;
  json extra;
  if (cfg.has("profile")) {
    const auto& p = cfg.raw("profile");
    const std::string kind = p.is_object() ? p.value("kind", "") : "";
    const int n = ctx.n;
    RadialProfile q;
    if (kind == "constant") {
      const double c = p.value("c", 1.0);
      q = [c](double) { return c; };
    } else if (kind == "exp_inverse") {
      const double a = p.value("a", n - 1.0);
      q = [a](double r) { return std::exp(a / r); };
    } else if (kind == "log_power") {
      const double c = p.value("C", 1.0);
      q = [c, n](double r) { return std::pow(std::max(0.0, std::log(c / r)), n - 1); };
    } else {
      throw ValidationError("config: profile kind must be constant, exp_inverse or log_power");
    }
    prof = divergence_profile(q, ctx.n, eps0, eps_list, dopt);
  } else {
    const auto nbhd = neighborhood(ctx, cfg.number("radius", std::min(ctx.normal, std::max(1.0, eps0 * 1.5))));
    if (!(eps0 < nbhd.radius())) throw ValidationError("config: eps0 must lie inside the neighbourhood");
    const auto quad = SphereQuadrature::make(ctx.n, ctx.seed);
    const auto q = field_from(cfg.has("field") ? cfg.raw("field") : json{{"kind", "constant"}, {"c", 1.0}}, ctx,
                              nbhd.radius(), &extra);
    prof = divergence_profile(nbhd, q, eps0, eps_list, quad, dopt);
  }
  res.header = {"eps", "integral", "increment", "slope"};
  for (const auto& r : prof.rows) res.rows.push_back(row(r.eps, r.integral, r.increment, r.slope));
  const std::string verdict = to_string(prof.verdict);
  res.summary["outputs"] = {{"verdict", verdict}, {"tail_ratio", num(prof.tail_ratio)},
                            {"tail_slope", num(prof.tail_slope)}};
  res.summary["empirical_constants"] = extra;
  const std::string expect = cfg.string("expect", "");
  res.summary["pass_flags"] = {{"verdict", expect.empty() ? prof.verdict != DivergenceVerdict::Inconclusive
                                                          : verdict == expect}};
  return res;
}

RunResult fmo(const Config& cfg, const Context& ctx) {
  RunResult res;
  const double eps0 = cfg.number("eps0", 0.5);
  const auto nbhd = neighborhood(ctx, cfg.number("radius", eps0));
  std::vector<double> eps_list = cfg.numbers("eps_list", {});
  if (eps_list.empty()) {
    eps_list.push_back(eps0);
    for (double e : halving(eps0, 15)) eps_list.push_back(e);
  }
  require_decreasing(eps_list, eps0 * (1.0 + 1e-12), "eps_list");
  const auto quad = SphereQuadrature::make(ctx.n, ctx.seed);
  json extra;
  const auto q = field_from(cfg.has("field") ? cfg.raw("field") : json{{"kind", "log_fmo"}, {"C", 1.0}}, ctx,
                            nbhd.radius(), &extra);
  const auto prof = fmo_profile(nbhd, q, eps_list, quad);
  res.header = {"eps", "mean", "oscillation"};
  for (const auto& r : prof.rows) res.rows.push_back(row(r.eps, r.mean, r.oscillation));
  res.summary["outputs"] = {{"max_oscillation", num(prof.max_oscillation)},
                            {"median_oscillation", num(prof.median_oscillation)},
                            {"bounded", prof.bounded}};
  res.summary["empirical_constants"] = extra;
  const auto expect = cfg.boolean("expect_bounded");
  res.summary["pass_flags"] = {{"fmo_verdict", prof.bounded == expect.value_or(true)}};
  return res;
}

std::vector<int> int_list(const Config& cfg, const char* key, std::vector<int> fallback) {
  if (!cfg.has(key)) return fallback;
  const auto& v = cfg.raw(key);
  if (v.is_number_integer()) return {v.get<int>()};
  if (!v.is_array() || v.empty()) throw ValidationError(std::string("config: \"") + key + "\" must be an integer or array");
  std::vector<int> out;
  for (const auto& x : v) {
    if (!x.is_number_integer()) throw ValidationError(std::string("config: \"") + key + "\" must hold integers");
    out.push_back(x.get<int>());
  }
  return out;
}

RunResult example7_distortion(const Config& cfg, const Context& ctx) {
  RunResult res;
  const auto ms = int_list(cfg, "m", {2, 3, 10, 100});
  const double r0 = cfg.number("r0", std::min(1.0, ctx.normal));
  if (!(r0 > 0.0 && r0 <= ctx.normal)) throw ValidationError("config: r0 outside (0, normal radius]");
  const long samples = cfg.integer("samples", 100000);
  if (samples <= 0) throw ValidationError("config: samples must be positive");
  const auto quad = SphereQuadrature::make(ctx.n, ctx.seed);
  res.header = {"m", "samples", "annulus_samples", "max_excess", "max_annulus_gap", "min_inner_Q",
                "gluing_mismatch", "c1", "C", "q_above_q1", "eq33_C1_hat", "eq33_C1_bound",
                "inner_increasing", "outer_decreasing", "strictly_increasing"};
  bool bound = true, glue = true, q1 = true, eq33 = true;
  double worst = -std::numeric_limits<double>::infinity();
  for (int m : ms) {
    const auto fam = ExampleFamilyConfig::make(ctx.n, m, r0, ctx.group);
    const auto rep = example_distortion_check(fam, static_cast<std::size_t>(samples), ctx.seed, quad);
    const auto prof = radial_profile_check(fam);
    res.rows.push_back(row(m, rep.samples, rep.annulus_samples, rep.max_excess, rep.max_annulus_gap,
                           rep.min_inner_q, rep.gluing_mismatch, rep.c1, rep.big_c, rep.q_above_q1,
                           rep.eq33_c1_hat, rep.eq33_c1_bound, prof.inner_increasing, prof.outer_decreasing,
                           prof.strictly_increasing));
    bound = bound && rep.distortion_bound;
    glue = glue && rep.gluing_mismatch < 1e-12;
    q1 = q1 && rep.q1_dominates;
    eq33 = eq33 && rep.eq33_bound;
    worst = std::max(worst, rep.max_excess);
  }
  res.summary["outputs"] = {{"max_excess", num(worst)}, {"r0", num(r0)}, {"r0_prime", num(euclidean_radius(r0))}};
  res.summary["pass_flags"] = {{"distortion_bound", bound}, {"gluing", glue}, {"q1_dominates", q1},
                               {"eq33_bound", eq33}};
  return res;
}

RunResult example7_equicontinuity(const Config& cfg, const Context& ctx) {
  RunResult res;
  const double r0 = cfg.number("r0", std::min(1.0, ctx.normal));
  if (!(r0 > 0.0 && r0 <= ctx.normal)) throw ValidationError("config: r0 outside (0, normal radius]");
  const long m_min = cfg.integer("m_min", 2), m_max = cfg.integer("m_max", 50);
  if (m_min < 2 || m_max < m_min) throw ValidationError("config: need 2 <= m_min <= m_max");
  std::vector<int> ms;
  for (long m = m_min; m <= m_max; ++m) ms.push_back(static_cast<int>(m));
  std::vector<double> deltas = cfg.numbers("delta_list", {});
  if (deltas.empty()) {
    for (int k = 0; k <= 12; ++k) deltas.push_back(r0 * std::ldexp(1.0, -k));
    deltas.push_back(0.0);
  }
  const auto prof = equicontinuity_profile(ctx.n, r0, ms, deltas, static_cast<int>(cfg.integer("radial_points", 2001)),
                                           static_cast<std::size_t>(cfg.integer("directions", 16)), ctx.seed);
  res.header = {"delta", "rho_delta", "displacement", "argmax_m", "bound"};
  for (const auto& r : prof.rows) res.rows.push_back(row(r.delta, r.rho_delta, r.displacement, r.argmax_m, r.bound));
  res.summary["outputs"] = {{"restricted_image_radius", num(prof.restricted_image_radius)},
                            {"continuum_radius", num(prof.continuum_radius)},
                            {"continuum_diameter", num(prof.continuum_diameter)},
                            {"continuum", "closed hemisphere {|x| = continuum_radius, x_1 >= 0}"}};
  res.summary["pass_flags"] = {{"nonincreasing", prof.nonincreasing}, {"within_bound", prof.within_bound},
                               {"continuum_omitted", prof.continuum_omitted}};
  return res;
}

RunResult calderon(const Config& cfg, const Context& ctx) {
  RunResult res;
  if (ctx.n < 3) throw ValidationError("config: calderon needs n >= 3");
  if (!cfg.has("phi") || !cfg.raw("phi").is_object()) throw ValidationError("config: phi object required");
  const auto& p = cfg.raw("phi");
  const std::string kind = p.value("kind", "");
  const double power = p.value("p", 3.0), logs = p.value("k", 0.0);
  std::function<double(double)> phi;
  if (kind == "power") {
    phi = [power](double t) { return std::pow(t, power); };
  } else if (kind == "power_log") {
    phi = [power, logs](double t) { return std::pow(t, power) * std::pow(std::log(std::exp(1.0) + t), logs); };
  } else {
    throw ValidationError("config: phi kind must be power or power_log");
  }
  const auto rep = calderon_check(phi, ctx.n, cfg.number("t_max", std::ldexp(1.0, 40)), cfg.number("tol", 1e-2));
  res.header = {"T", "partial", "increment"};
  for (const auto& r : rep.rows) res.rows.push_back(row(r.t, r.partial, r.increment));
  const std::string verdict = to_string(rep.verdict);
  res.summary["outputs"] = {{"verdict", verdict}, {"tail_ratio", num(rep.tail_ratio)},
                            {"decay_exponent", num(rep.decay_exponent)}};
  const std::string expect = cfg.string("expect", "");
  res.summary["pass_flags"] = {{"verdict", expect.empty() || verdict == expect}};
  return res;
}

RunResult group_audit(const Config& cfg, const Context& ctx) {
  RunResult res;
  const long count = cfg.integer("samples", 64);
  if (count <= 0) throw ValidationError("config: samples must be positive");
  const double radius = cfg.number("radius", 1.0);
  Rng rng = make_stream(ctx.seed, 3);
  std::vector<Vec> pts{ctx.center};
  for (long k = 1; k < count; ++k) pts.push_back(uniform_in_ball(ctx.n, 0.9, rng));
  const auto rep = verify_group_action(*ctx.group, pts, radius);
  res.header = {"sample", "min_displacement", "fixed_point_free", "near_count"};
  for (std::size_t k = 0; k < rep.samples.size(); ++k) {
    const auto& s = rep.samples[k];
    res.rows.push_back(row(k, s.min_displacement, s.fixed_point_free, s.near_count));
  }
  res.summary["outputs"] = {{"group_size", ctx.group->size()}, {"normal_radius", num(ctx.normal)},
                            {"max_near_count", rep.max_near_count}};
  res.summary["pass_flags"] = {{"fixed_point_free", rep.fixed_point_free}};
  return res;
}

using Handler = RunResult (*)(const Config&, const Context&);

const std::map<std::string, std::pair<Handler, std::set<std::string>>>& registry() {
  static const std::map<std::string, std::pair<Handler, std::set<std::string>>> table = {
      {"verify-fubini", {verify_fubini, {"r0_list", "fields", "budget"}}},
      {"ring-modulus", {ring_modulus, {"r1", "r2", "outer_radius", "metric", "directions", "cells", "bundle_size",
                                       "tolerance", "solver_tol"}}},
      {"ring-inequality", {ring_inequality, {"r1", "r2", "field", "map", "eta", "directions", "cells",
                                             "bundle_size", "discretization_tol"}}},
      {"lower-bound", {lower_bound, {"eps0", "eps_list", "field"}}},
      {"divergence", {divergence, {"eps0", "eps_list", "field", "profile", "threshold_slope", "expect"}}},
      {"fmo", {fmo, {"eps0", "eps_list", "field", "expect_bounded"}}},
      {"example7-distortion", {example7_distortion, {"m", "r0", "samples"}}},
      {"example7-equicontinuity", {example7_equicontinuity, {"r0", "m_min", "m_max", "delta_list",
                                                             "radial_points", "directions"}}},
      {"calderon", {calderon, {"phi", "t_max", "tol", "expect"}}},
      {"group-audit", {group_audit, {"samples"}}},
  };
  return table;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

RunResult run_experiment(const json& config, const RunOptions& options) {
  if (!config.is_object()) throw ValidationError("config: top level must be an object");
  if (!config.contains("command") || !config["command"].is_string()) throw ValidationError("config: missing \"command\"");
  const std::string command = config["command"];
  const auto it = registry().find(command);
  if (it == registry().end()) throw ValidationError("config: unknown command \"" + command + "\"");
  const Config cfg(config, it->second.second);
  const Context ctx = make_context(cfg, config, options);
  RunResult res = it->second.first(cfg, ctx);
  res.command = command;
  res.stem = cfg.string("output", command);
  if (res.stem.empty() || res.stem.find('/') != std::string::npos) throw ValidationError("config: output must be a plain file stem");
  json inputs = config;
  inputs["seed"] = ctx.seed;
  if (!ctx.group_path.empty()) inputs["group"] = ctx.group_path;
  res.summary["schema"] = kReportSchema;
  res.summary["command"] = command;
  res.summary["inputs"] = inputs;
  res.summary["seed"] = ctx.seed;
  if (!res.summary.contains("empirical_constants") || res.summary["empirical_constants"].is_null()) {
    res.summary["empirical_constants"] = json::object();
  }
  res.all_pass = true;
  for (const auto& [k, v] : res.summary["pass_flags"].items()) res.all_pass = res.all_pass && v.get<bool>();
  return res;
}

std::string csv_body(const RunResult& result) {
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) os << (k ? "," : "") << cells[k];
    os << '\n';
  };
  line(result.header);
  for (const auto& r : result.rows) line(r);
  return os.str();
}

void write_report(const RunResult& result, const std::filesystem::path& out_dir, double runtime_seconds) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream csv(out_dir / (result.stem + ".csv"), std::ios::binary);
    csv << csv_body(result);
    if (!csv) throw std::runtime_error("cannot write " + (out_dir / (result.stem + ".csv")).string());
  }
  json summary = result.summary;
  summary["runtime"] = {{"seconds", round12(runtime_seconds)}, {"finished_utc", utc_now()}};
  std::ofstream js(out_dir / (result.stem + ".json"), std::ios::binary);
  js << summary.dump(2) << '\n';
  if (!js) throw std::runtime_error("cannot write " + (out_dir / (result.stem + ".json")).string());
}

int run_config_file(const std::filesystem::path& config_path, const RunOptions& options, std::ostream& out,
                    std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult res;
  try {
    std::ifstream in(config_path);
    if (!in) throw ValidationError("cannot open config " + config_path.string());
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    RunOptions opt = options;
    opt.config_dir = config_path.parent_path().empty() ? std::filesystem::path(".") : config_path.parent_path();
    res = run_experiment(doc, opt);
  } catch (const ValidationError& e) {
    err << "qmod: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    err << "qmod: config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "qmod: numeric failure: " << e.what() << '\n';
    return 1;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    write_report(res, options.out_dir, secs);
  } catch (const std::exception& e) {
    err << "qmod: " << e.what() << '\n';
    return 1;
  }
  out << res.command << ": wrote " << (options.out_dir / (res.stem + ".csv")).string() << " and "
      << (options.out_dir / (res.stem + ".json")).string() << '\n';
  for (const auto& [k, v] : res.summary["pass_flags"].items()) out << "  " << k << " = " << v.dump() << '\n';
  return res.all_pass ? 0 : 1;
}

int audit_group_file(const std::filesystem::path& group_path, std::ostream& out, std::ostream& err) {
  try {
    const auto group = load_group_definition(group_path);
    const int n = group.dim();
    Rng rng = make_stream(1, 3);
    std::vector<Vec> pts{Vec::Zero(n)};
    for (int k = 1; k < 64; ++k) pts.push_back(uniform_in_ball(n, 0.9, rng));
    const double r = normal_radius(group, Vec::Zero(n));
    const auto rep = verify_group_action(group, pts, r);
    json j = {{"schema", kReportSchema},
              {"command", "audit-group"},
              {"group", group_path.string()},
              {"n", n},
              {"depth", group.depth()},
              {"elements", group.size()},
              {"normal_radius_at_origin", num(r)},
              {"fixed_point_free", rep.fixed_point_free},
              {"max_near_count", rep.max_near_count}};
    out << j.dump(2) << '\n';
    return rep.fixed_point_free ? 0 : 1;
  } catch (const ValidationError& e) {
    err << "qmod: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "qmod: numeric failure: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace qmod
