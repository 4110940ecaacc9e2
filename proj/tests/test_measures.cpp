#include <doctest.h>

#include "qmod/geometry.hpp"
#include "qmod/measures.hpp"
#include "support.hpp"

#include <nlohmann/json.hpp>

using namespace qmod;
using namespace qmod::testing;

namespace {

// Hyperbolic volume of a ball of radius r.
double ball_volume(int n, double r) {
  if (n == 2) return 2.0 * std::numbers::pi * (std::cosh(r) - 1.0);
  if (n == 3) return std::numbers::pi * (std::sinh(2.0 * r) - 2.0 * r);
  throw std::logic_error("ball_volume: n");
}

}  // namespace

TEST_CASE("sphere quadrature weights sum to the sphere area") {
  for (int n : {2, 3}) CHECK(SphereQuadrature::make(n).total_weight() == doctest::Approx(unit_sphere_area(n)).epsilon(1e-13));
  CHECK(SphereQuadrature::make(4, 1, 20000).total_weight() == doctest::Approx(unit_sphere_area(4)).epsilon(1e-12));
}

TEST_CASE("sphere integral of a constant is the geodesic sphere area") {
  for (int n : {2, 3}) {
    const auto nb = ChartedNeighborhood::trivial(n, 2.0);
    const auto quad = SphereQuadrature::make(n);
    for (double r : {0.01, 0.3, 1.5}) {
      const double area = unit_sphere_area(n) * std::pow(std::sinh(r), n - 1);
      CHECK(sphere_integral(nb, r, ScalarField::constant(1.0), quad) == doctest::Approx(area).epsilon(1e-12));
      const double eucl = unit_sphere_area(n) * std::pow(std::tanh(0.5 * r), n - 1);
      CHECK(sphere_integral(nb, r, ScalarField::constant(1.0), quad, ShellMeasure::Euclidean) ==
            doctest::Approx(eucl).epsilon(1e-12));
    }
  }
}

TEST_CASE("affine fields average to their constant term") {
  Rng rng = make_stream(301, 0);
  for (int n : {2, 3}) {
    const auto nb = ChartedNeighborhood::trivial(n, 2.0);
    const auto quad = SphereQuadrature::make(n);
    const Vec b = ball_point(n, 1.0, rng);
    const double got = sphere_integral(nb, 0.7, ScalarField::affine(2.5, b), quad);
    CHECK(got == doctest::Approx(2.5 * sphere_integral(nb, 0.7, ScalarField::constant(1.0), quad)).epsilon(1e-10));
  }
}

TEST_CASE("shell, product-rule and Monte Carlo volumes agree with the closed form") {
  for (int n : {2, 3}) {
    const auto nb = ChartedNeighborhood::trivial(n, 2.0);
    const auto quad = SphereQuadrature::make(n);
    const auto one = ScalarField::constant(1.0);
    for (double r0 : {0.25, 1.0}) {
      const double exact = ball_volume(n, r0);
      CHECK(shell_integral(nb, r0, one, quad) == doctest::Approx(exact).epsilon(1e-9));
      CHECK(volume_integral(nb, r0, one, quad) == doctest::Approx(exact).epsilon(1e-9));
      const auto mc = ball_integral(nb, r0, one, 40000, 9);
      CHECK(std::abs(mc.value - exact) < 5.0 * mc.stderr_ + 1e-12);
    }
    const auto ind = ScalarField::radial_indicator(0.2, 0.6);
    const double exact = ball_volume(n, 0.6) - ball_volume(n, 0.2);
    CHECK(volume_integral(nb, 1.0, ind, quad) == doctest::Approx(exact).epsilon(1e-9));
    CHECK(shell_integral(nb, 1.0, ind, quad) == doctest::Approx(exact).epsilon(1e-9));
  }
}

TEST_CASE("Monte Carlo volume does not depend on the thread count") {
  const auto nb = ChartedNeighborhood::trivial(3, 2.0);
  const auto q = ScalarField::log_fmo(1.0);
  const auto a = ball_integral(nb, 0.5, q, 30000, 17, 1);
  const auto b = ball_integral(nb, 0.5, q, 30000, 17, 3);
  CHECK(a.value == b.value);
  CHECK(a.stderr_ == b.stderr_);
  const auto c = ball_integral(nb, 0.5, q, 30000, 18, 1);
  CHECK(a.value != c.value);
}

TEST_CASE("Fubini bracket and the coarea identity") {
  for (int n : {2, 3}) {
    const auto nb = ChartedNeighborhood::trivial(n, 2.0);
    const auto quad = SphereQuadrature::make(n);
    for (double r0 : {0.25, 0.5}) {
      const auto rep = fubini_sandwich(nb, r0, ScalarField::log_fmo(1.0), quad, 100000, 3);
      CHECK(rep.in_bracket);
      CHECK(rep.lower == std::ldexp(1.0, n - 1));
      CHECK(rep.upper == doctest::Approx(std::ldexp(1.0, n) * fubini_constant(n, r0)).epsilon(1e-15));
      CHECK(std::abs(rep.ratio_hyperbolic - 1.0) < 5.0 * rep.relative_error + 1e-3);
    }
  }
  const double rho = std::tanh(0.25);
  CHECK(fubini_constant(3, 0.5) == doctest::Approx(0.5 / std::pow(1.0 - rho * rho, 2)).epsilon(1e-14));
}

TEST_CASE("q_stats identity holds") {
  const auto nb = ChartedNeighborhood::trivial(3, 2.0);
  const auto quad = SphereQuadrature::make(3);
  Vec b = Vec::Zero(3);
  b(0) = 0.4;
  for (double r : {0.05, 0.3, 0.9}) {
    const auto s = q_stats(nb, r, ScalarField::affine(1.0, b), quad);
    CHECK(s.identity_residual < 1e-12);
    CHECK(s.q_mean == doctest::Approx(std::sinh(r) * std::sinh(r) / (r * r)).epsilon(1e-10));
  }
}

TEST_CASE("finite mean oscillation profiles") {
  const auto nb = ChartedNeighborhood::trivial(2, 2.0);
  const auto quad = SphereQuadrature::make(2);
  std::vector<double> eps;
  for (int k = 0; k < 10; ++k) eps.push_back(0.5 * std::ldexp(1.0, -k));
  const auto log_prof = fmo_profile(nb, ScalarField::log_fmo(1.0), eps, quad);
  CHECK(log_prof.bounded);
  for (const auto& row : log_prof.rows) CHECK(row.oscillation == doctest::Approx(log_prof.rows.back().oscillation).epsilon(0.05));
  const auto const_prof = fmo_profile(nb, ScalarField::constant(3.0), eps, quad);
  CHECK(const_prof.max_oscillation < 1e-12);
  const auto exp_prof = fmo_profile(nb, ScalarField::exp_inverse(1.0), eps, quad);
  CHECK_FALSE(exp_prof.bounded);
}

TEST_CASE("field specifications") {
  const auto q = ScalarField::from_json(nlohmann::json::parse(R"({"kind": "log_power", "C": 2.0})"), 3);
  Vec y = Vec::Zero(3);
  y(2) = std::tanh(0.25);
  CHECK(q(y) == doctest::Approx(std::pow(std::log(4.0), 2)).epsilon(1e-12));
  CHECK_THROWS_AS(ScalarField::from_json(nlohmann::json::parse(R"({"kind": "mystery"})"), 2), ValidationError);
  CHECK_THROWS_AS(ScalarField::from_json(nlohmann::json::parse(R"({"kind": "log_fmo", "C": -1})"), 2),
                  ValidationError);
  CHECK_THROWS_AS(ScalarField::radial_indicator(0.5, 0.2), ValidationError);
  const auto sq = ScalarField::constant(3.0).pow(2.0).scaled(0.5);
  CHECK(sq(y) == doctest::Approx(4.5));
}

TEST_CASE("pullback through a centred chart") {
  Vec a = Vec::Zero(2);
  a(0) = 0.6;
  auto g = std::make_shared<const DiscreteGroup>(generate_group({ball_translation(a)}, 2, 2));
  Vec c = Vec::Zero(2);
  c(1) = 0.3;
  const ChartedNeighborhood nb(g, c);
  const auto q = pullback([c](const Vec& x) { return hyp_distance(x, c); }, nb, "distance_to_centre");
  Rng rng = make_stream(302, 0);
  for (int k = 0; k < 50; ++k) {
    const Vec y = ball_point(2, 0.3, rng);
    CHECK(q(y) == doctest::Approx(hyp_distance(y, Vec::Zero(2))).epsilon(1e-10));
  }
}
