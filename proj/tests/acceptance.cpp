// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include "qmod/distortion.hpp"
#include "qmod/example_family.hpp"
#include "qmod/geometry.hpp"
#include "qmod/measures.hpp"
#include "qmod/modulus.hpp"
#include "qmod/modulus_solver.hpp"
#include "qmod/runner.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qmod;
using namespace qmod::testing;

namespace {

int failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("%s %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void ac1_ring_baseline() {
  std::string detail;
  bool pass = true;
  struct Case {
    int n;
    std::size_t directions;
    int cells;
    double tol;
    double budget_s;
  };
  for (const Case c : {Case{2, 512, 256, 0.05, 60.0}, Case{3, 2048, 128, 0.08, 300.0}}) {
    const auto t0 = std::chrono::steady_clock::now();
    const double rho2 = 0.5, rho1 = rho2 / std::exp(1.0), hw = rho2 * (1.0 + 1e-9);
    const std::size_t bundle = default_bundle_size(c.n, rho2, hw, c.cells, c.directions);
    const auto family = radial_ring_family(c.n, rho1, rho2, c.directions, MetricTag::Euclidean, bundle);
    const auto res = modulus_solve(GridBox::cube(c.n, hw, c.cells), family, c.n);
    const double secs = seconds_since(t0);
    const double exact = ring_modulus_exact(rho1, rho2, c.n);
    const double rel = res.value / exact - 1.0;
    pass = pass && std::abs(rel) <= c.tol && secs < c.budget_s;
    detail += "n=" + std::to_string(c.n) + ": M=" + fmt("%.6f", res.value) + " vs " + fmt("%.6f", exact) +
              " rel=" + fmt("%+.4f", rel) + " bundle=" + std::to_string(bundle) + " t=" + fmt("%.1fs", secs) + "; ";
  }
  report("AC1", pass, detail);
}

void ac2_isometries() {
  Rng rng = make_stream(2024, 2);
  int fails = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = uniform_int(2, 4, rng);
    const auto t = make_motion(ball_point(n, 0.95, rng), random_orthogonal(n, rng));
    const Vec x = ball_point(n, 0.95, rng), y = ball_point(n, 0.95, rng);
    const double gap = std::abs(hyp_distance(t.apply(x), t.apply(y)) - hyp_distance(x, y));
    worst = std::max(worst, gap);
    if (!(gap < 1e-9)) ++fails;
  }
  report("AC2", fails == 0, std::to_string(fails) + " failures in 10000 trials, worst gap " + fmt("%.2e", worst));
}

void ac3_weighted_infimum() {
  Rng rng = make_stream(2024, 3);
  double worst_oracle = 0.0, worst_attain = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    DiscreteMeasureSpace s;
    const int k = uniform_int(1, 8, rng);
    for (int i = 0; i < k; ++i) {
      s.mu.push_back(uniform(0.05, 3.0, rng));
      s.phi.push_back(uniform(0.05, 10.0, rng));
    }
    const double q = std::array{1.5, 2.0, 3.0}[trial % 3];
    const auto inf = weighted_inf_integral(s, q);
    const double scale = std::max(1.0, inf.value);
    worst_oracle = std::max(worst_oracle, std::abs(greedy_grid_infimum(s, q, 20000) - inf.value) / scale);
    worst_attain = std::max(worst_attain, std::abs(weighted_objective(s, inf.alpha_star, q) - inf.value) / scale);
  }
  report("AC3", worst_oracle <= 1e-3 && worst_attain <= 1e-10,
         "200 spaces: oracle gap " + fmt("%.2e", worst_oracle) + ", extremizer gap " + fmt("%.2e", worst_attain));
}

void ac4_fubini() {
  bool pass = true;
  double worst_err = 0.0;
  int cases = 0, inside = 0;
  for (int n : {2, 3}) {
    const auto nb = ChartedNeighborhood::trivial(n, 2.0);
    const auto quad = SphereQuadrature::make(n);
    const std::vector<ScalarField> fields{ScalarField::constant(1.0), ScalarField::radial_indicator(0.1, 0.2),
                                          ScalarField::log_fmo(1.0)};
    for (const auto& q : fields) {
      for (double r0 : {0.25, 0.5}) {
        const auto rep = fubini_sandwich(nb, r0, q, quad, 400000, 7 + cases);
        ++cases;
        inside += rep.in_bracket;
        worst_err = std::max(worst_err, rep.relative_error);
        pass = pass && rep.in_bracket && rep.relative_error < 0.01;
      }
    }
  }
  report("AC4", pass, std::to_string(inside) + "/" + std::to_string(cases) + " in bracket, worst MC error " +
                          fmt("%.2e", worst_err));
}

void ac5_sandwich() {
  bool pass = true;
  int rows = 0, ordered = 0;
  std::string consts;
  for (int n : {2, 3}) {
    const auto nb = ChartedNeighborhood::trivial(n, 2.0);
    const auto quad = SphereQuadrature::make(n);
    const double r1 = 0.1, r2 = 0.5;
    const std::vector<ScalarField> qs{ScalarField::constant(1.0), ScalarField::log_fmo(1.0)};
    std::vector<ScalarField> battery = qs;
    battery.push_back(ScalarField::radial_indicator(r1, r2));
    const auto k = extremal_constants(nb, r2, battery, quad);
    consts += "n=" + std::to_string(n) + " M1=" + fmt("%.9f", k.m1_hat) + " M2=" + fmt("%.9f", k.m2_hat) + "; ";
    for (const auto& q : qs) {
      for (const auto& row : extremal_sandwich(nb, q, r1, r2, k, quad)) {
        ++rows;
        ordered += row.ordered;
        pass = pass && row.ordered;
      }
    }
  }
  report("AC5", pass, std::to_string(ordered) + "/" + std::to_string(rows) + " rows ordered; " + consts);
}

void ac6_distortion() {
  bool pass = true;
  double worst_excess = -1e300, worst_glue = 0.0;
  for (int n : {2, 3}) {
    const auto quad = SphereQuadrature::make(n);
    for (int m : {2, 3, 10, 100}) {
      const auto cfg = ExampleFamilyConfig::make(n, m, 1.0);
      const auto rep = example_distortion_check(cfg, 100000, 1000 + m, quad);
      worst_excess = std::max(worst_excess, rep.max_excess);
      worst_glue = std::max(worst_glue, rep.gluing_mismatch);
      pass = pass && rep.max_excess <= 1e-9 && rep.gluing_mismatch < 1e-12;
    }
  }
  report("AC6", pass, "max K_O^{n-1} - Q = " + fmt("%.3e", worst_excess) + ", gluing mismatch " +
                          fmt("%.3e", worst_glue));
}

void ac7_divergence() {
  // Q1 = log^{n-1}(C/h) with C = e r0' c1* from the example family at r0 = 1.
  bool pass = true;
  std::string detail;
  std::vector<double> eps;
  for (int k = 1; k <= 40; ++k) eps.push_back(0.5 * std::ldexp(1.0, -k));
  for (int n : {2, 3}) {
    const auto nb = ChartedNeighborhood::trivial(n, 1.0);
    const auto quad = SphereQuadrature::make(n);
    const double c1 = estimate_metric_comparison(n, 1.0, 30000, 1).c1;
    const double big_c = std::exp(1.0) * euclidean_radius(1.0) / c1;
    const auto prof = divergence_profile(nb, ScalarField::log_power(big_c, n), 0.5, eps, quad);
    double tail_increment = 1e300;
    for (std::size_t i = prof.rows.size() - 4; i < prof.rows.size(); ++i)
      tail_increment = std::min(tail_increment, prof.rows[i].increment);
    const bool ok = prof.verdict == DivergenceVerdict::Divergent && tail_increment >= 0.5;
    pass = pass && ok;
    detail += "n=" + std::to_string(n) + " Q1 verdict=" + to_string(prof.verdict) + " tail increment per halving " +
              fmt("%.4f", tail_increment) + " (need >= 0.5); ";
  }
  const auto conv = divergence_profile([](double r) { return std::exp(1.0 / r); }, 2, 0.5, eps);
  pass = pass && conv.verdict == DivergenceVerdict::Convergent;
  detail += "exp(1/h) verdict=" + to_string(conv.verdict);
  report("AC7", pass, detail);
}

void ac8_equicontinuity() {
  const double r0 = 1.0;
  std::vector<int> ms;
  for (int m = 2; m <= 50; ++m) ms.push_back(m);
  std::vector<double> deltas;
  for (int k = 0; k <= 12; ++k) deltas.push_back(r0 * std::ldexp(1.0, -k));
  bool pass = true;
  std::string detail;
  for (int n : {2, 3}) {
    const auto prof = equicontinuity_profile(n, r0, ms, deltas, 2001, 16, 1);
    const auto& last = prof.rows.back();
    const double bound = 2.0 * std::log(2.0 * std::exp(1.0)) * std::tanh(0.5 * last.delta) + 1e-9;
    const bool ok = prof.nonincreasing && last.displacement <= bound;
    pass = pass && ok;
    detail += "n=" + std::to_string(n) + " nonincreasing=" + (prof.nonincreasing ? "yes" : "no") +
              " smallest-delta displacement " + fmt("%.6e", last.displacement) + " <= " + fmt("%.6e", bound) + "; ";
  }
  report("AC8", pass, detail);
}

void ac9_dilatation() {
  bool branches = true;
  for (int n : {2, 3, 4}) {
    branches = branches && outer_dilatation(Mat::Identity(n, n)) == 1.0;
    branches = branches && outer_dilatation(Mat::Zero(n, n)) == 1.0;
    Mat sing = Mat::Identity(n, n);
    sing(0, 0) = 0.0;
    branches = branches && std::isinf(outer_dilatation(sing));
  }
  Rng rng = make_stream(2024, 9);
  int below = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Mat j = gaussian_matrix(uniform_int(2, 4, rng), rng);
    if (std::abs(j.determinant()) < 1e-12) continue;
    if (!(outer_dilatation(j) >= 1.0 - 1e-12)) ++below;
  }
  report("AC9", branches && below == 0,
         std::string("branches ") + (branches ? "ok" : "wrong") + ", " + std::to_string(below) +
             " of 10000 random matrices with K_O < 1");
}

void ac10_determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "qmod_acceptance_determinism";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::vector<std::string> configs{
      R"({"command": "verify-fubini", "n": 3, "seed": 42, "budget": 50000, "output": "fubini"})",
      R"({"command": "example7-distortion", "n": 2, "seed": 42, "samples": 5000, "output": "distortion"})",
      R"({"command": "ring-modulus", "n": 2, "seed": 42, "directions": 128, "cells": 64, "output": "ring"})"};
  bool pass = true;
  std::ostringstream sink;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    const auto path = dir / ("c" + std::to_string(k) + ".json");
    std::ofstream(path) << configs[k];
    std::string bodies[2];
    std::string stem;
    for (int run = 0; run < 2; ++run) {
      RunOptions opt;
      opt.out_dir = dir / ("run" + std::to_string(run));
      run_config_file(path, opt, sink, sink);
      stem = nlohmann::json::parse(configs[k])["output"];
      std::ifstream in(opt.out_dir / (stem + ".csv"), std::ios::binary);
      std::ostringstream os;
      os << in.rdbuf();
      bodies[run] = os.str();
    }
    pass = pass && !bodies[0].empty() && bodies[0] == bodies[1];
  }
  report("AC10", pass, std::to_string(configs.size()) + " configs run twice, CSV bodies compared byte for byte");
}

}  // namespace

int main() {
  const std::pair<const char*, void (*)()> criteria[] = {
      {"AC1", ac1_ring_baseline}, {"AC2", ac2_isometries},   {"AC3", ac3_weighted_infimum},
      {"AC4", ac4_fubini},        {"AC5", ac5_sandwich},     {"AC6", ac6_distortion},
      {"AC7", ac7_divergence},    {"AC8", ac8_equicontinuity}, {"AC9", ac9_dilatation},
      {"AC10", ac10_determinism}};
  for (const auto& [id, fn] : criteria) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, std::string("exception: ") + e.what());
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
