#include <doctest.h>

#include "qmod/modulus.hpp"
#include "support.hpp"

using namespace qmod;
using namespace qmod::testing;

namespace {

DiscreteMeasureSpace random_space(Rng& rng) {
  DiscreteMeasureSpace s;
  const int k = uniform_int(1, 8, rng);
  for (int i = 0; i < k; ++i) {
    s.mu.push_back(uniform(0.1, 2.0, rng));
    s.phi.push_back(uniform(0.1, 5.0, rng));
  }
  return s;
}

}  // namespace

TEST_CASE("ring modulus closed form") {
  CHECK(ring_modulus_exact(1.0, std::exp(1.0), 2) == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-15));
  CHECK(ring_modulus_exact(1.0, std::exp(1.0), 3) == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-15));
  CHECK(ring_modulus_exact(0.1, 0.4, 3) == doctest::Approx(4.0 * std::numbers::pi / std::pow(std::log(4.0), 2)));
  CHECK_THROWS_AS(ring_modulus_exact(0.5, 0.4, 2), DomainError);
}

TEST_CASE("weighted infimum against the greedy grid oracle") {
  Rng rng = make_stream(401, 0);
  for (int trial = 0; trial < 60; ++trial) {
    const auto s = random_space(rng);
    const double q = std::array{1.5, 2.0, 3.0}[trial % 3];
    const auto inf = weighted_inf_integral(s, q);
    CHECK(std::abs(greedy_grid_infimum(s, q, 20000) - inf.value) <= 1e-3 * std::max(1.0, inf.value));
    CHECK(std::abs(weighted_objective(s, inf.alpha_star, q) - inf.value) <= 1e-10 * std::max(1.0, inf.value));
    double mass = 0.0;
    for (std::size_t i = 0; i < s.mu.size(); ++i) mass += s.mu[i] * inf.alpha_star[i];
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("no admissible alpha beats the infimum") {
  Rng rng = make_stream(402, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_space(rng);
    const double q = uniform(1.2, 4.0, rng);
    std::vector<double> alpha(s.mu.size());
    double mass = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      alpha[i] = uniform(0.0, 1.0, rng);
      mass += s.mu[i] * alpha[i];
    }
    for (double& a : alpha) a /= mass;
    CHECK(weighted_objective(s, alpha, q) >= weighted_inf_integral(s, q).value * (1.0 - 1e-12));
  }
}

TEST_CASE("measure space validation") {
  CHECK_THROWS_AS(weighted_inf_integral(DiscreteMeasureSpace{{1.0}, {1.0, 2.0}}, 2.0), ValidationError);
  CHECK_THROWS_AS(weighted_inf_integral(DiscreteMeasureSpace{{1.0}, {0.0}}, 2.0), ValidationError);
  CHECK_THROWS_AS(weighted_inf_integral(DiscreteMeasureSpace{{1.0}, {1.0}}, 1.0), DomainError);
}

TEST_CASE("extremal weight eta0") {
  const RadialProfile one = [](double) { return 1.0; };
  for (int n : {2, 3}) {
    const auto w = eta0_weight(one, 0.1, 0.4, n);
    CHECK(w.integral == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    double total = 0.0;
    const int steps = 20000;
    for (int k = 0; k < steps; ++k) total += w(0.1 + (k + 0.5) * 0.3 / steps) * 0.3 / steps;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(w(0.05) == 0.0);
  }
  CHECK(eta0_weight(one, 0.0, 0.4, 2).degenerate);
  const RadialProfile steep = [](double r) { return std::exp(1.0 / r); };
  const auto w = eta0_weight(steep, 0.0, 0.4, 2);
  CHECK_FALSE(w.degenerate);
  CHECK(w.integral > 0.0);
  CHECK_THROWS_AS(eta0_weight([](double) { return std::numeric_limits<double>::infinity(); }, 0.1, 0.4, 2),
                  ValidationError);
}

TEST_CASE("lower bound integral for Q = 1") {
  const auto nb = ChartedNeighborhood::trivial(2, 2.0);
  const auto quad = SphereQuadrature::make(2);
  for (double eps : {0.1, 0.01, 1e-4}) {
    const auto lb = lower_bound_integral(nb, ScalarField::constant(1.0), eps, 0.5, quad);
    const double exact = std::log(std::tanh(0.25) / std::tanh(0.5 * eps)) / (2.0 * std::numbers::pi);
    CHECK(lb.value == doctest::Approx(exact).epsilon(1e-9));
    CHECK(lb.residual < 1e-9);
  }
  CHECK_THROWS_AS(lower_bound_integral(nb, ScalarField::constant(1.0), 0.6, 0.5, quad), DomainError);
}

TEST_CASE("divergence profile for Q = 1 matches log tanh") {
  const auto nb = ChartedNeighborhood::trivial(3, 2.0);
  const auto quad = SphereQuadrature::make(3);
  std::vector<double> eps;
  for (int k = 1; k <= 30; ++k) eps.push_back(0.5 * std::ldexp(1.0, -k));
  const auto prof = divergence_profile(nb, ScalarField::constant(1.0), 0.5, eps, quad);
  for (const auto& row : prof.rows) {
    CHECK(row.integral == doctest::Approx(std::log(std::tanh(0.25) / std::tanh(0.5 * row.eps))).epsilon(1e-9));
  }
  CHECK(prof.verdict == DivergenceVerdict::Divergent);
}

TEST_CASE("divergence verdicts on radial profiles") {
  std::vector<double> eps;
  for (int k = 1; k <= 40; ++k) eps.push_back(0.5 * std::ldexp(1.0, -k));
  const auto conv = divergence_profile([](double r) { return std::exp(1.0 / r); }, 2, 0.5, eps);
  CHECK(conv.verdict == DivergenceVerdict::Convergent);
  const auto div = divergence_profile([](double) { return 2.0; }, 3, 0.5, eps);
  CHECK(div.verdict == DivergenceVerdict::Divergent);
  for (const auto& row : div.rows) CHECK(row.slope == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(to_string(DivergenceVerdict::Inconclusive) == "inconclusive");
  CHECK(classify_tail({}, DivergenceOptions{}) == DivergenceVerdict::Inconclusive);
  CHECK_THROWS_AS(divergence_profile([](double) { return 1.0; }, 2, 0.5, {0.2, 0.3}), ValidationError);
}

TEST_CASE("extremal constants and sandwich") {
  for (int n : {2, 3}) {
    const auto nb = ChartedNeighborhood::trivial(n, 2.0);
    const auto quad = SphereQuadrature::make(n);
    for (const auto& q : {ScalarField::constant(1.0), ScalarField::log_fmo(1.0)}) {
      const auto k = extremal_constants(nb, 0.5, {ScalarField::constant(1.0), q}, quad);
      CHECK(k.c2_hat <= k.c1_hat);
      CHECK(k.m1_hat == doctest::Approx(1.0 / k.c2_hat).epsilon(1e-15));
      CHECK(k.m2_hat == doctest::Approx(k.c1_hat / (k.c2_hat * k.c2_hat)).epsilon(1e-15));
      const auto rows = extremal_sandwich(nb, q, 0.1, 0.5, k, quad);
      REQUIRE(rows.size() == 3);
      for (const auto& row : rows) {
        CHECK(row.ordered);
        CHECK(row.eta_integral == doctest::Approx(1.0).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("integral of Q eta0^n equals omega over I^(n-1)") {
  for (int n : {2, 3}) {
    const auto nb = ChartedNeighborhood::trivial(n, 2.0);
    const auto quad = SphereQuadrature::make(n);
    const auto q = ScalarField::log_fmo(1.0);
    const auto eta0 = eta0_weight(mean_profile(nb, q, quad), 0.1, 0.5, n);
    const double lhs = unit_sphere_area(n) / std::pow(eta0.integral, n - 1);
    CHECK(weighted_ring_integral(nb, q, 0.1, 0.5, eta0, quad) == doctest::Approx(lhs).epsilon(1e-8));
  }
}

TEST_CASE("ring inequality for the identity map") {
  const auto nb = ChartedNeighborhood::trivial(2, 2.0);
  const auto quad = SphereQuadrature::make(2);
  const auto q = ScalarField::constant(1.0);
  const auto eta0 = eta0_weight(mean_profile(nb, q, quad), 0.1, 0.5, 2);
  RingOptions opt;
  opt.directions = 256;
  opt.cells = 128;
  const auto rep = ring_inequality_check(nb, [](const Vec& y) { return y; }, q, 0.1, 0.5, eta0, quad, opt);
  const double conformal = ring_modulus_exact(std::tanh(0.05), std::tanh(0.25), 2);
  CHECK(std::abs(rep.lhs / conformal - 1.0) < 0.05);
  CHECK(rep.pass);
  CHECK(rep.eta_integral == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(ring_inequality_check(nb, [](const Vec& y) { return y; }, q, 0.1, 0.5,
                                        [](double) { return 1.0; }, quad, opt),
                  ValidationError);
}

TEST_CASE("image ring modulus is invariant under a rotation") {
  RingOptions opt;
  opt.directions = 256;
  opt.cells = 128;
  const double c = std::cos(0.7), s = std::sin(0.7);
  const auto id = image_ring_modulus(2, [](const Vec& y) { return y; }, 0.1, 0.4, opt).value;
  const auto rot = image_ring_modulus(
      2, [c, s](const Vec& y) { Vec z(2); z << c * y(0) - s * y(1), s * y(0) + c * y(1); return z; }, 0.1, 0.4, opt);
  CHECK(std::abs(rot.value / id - 1.0) < 0.02);
}
