#include <doctest.h>

#include "qmod/distortion.hpp"
#include "support.hpp"

using namespace qmod;
using namespace qmod::testing;

namespace {

// Largest root of the characteristic polynomial of S = J^T J by bisection,
// for n = 2, 3. All roots are real, so beyond the largest critical point the
// polynomial increases through its largest root, which is at most tr S.
double largest_singular_value_bisect(const Mat& j) {
  const Mat s = j.transpose() * j;
  const double tr = s.trace();
  std::function<double(double)> charpoly;
  double lo = 0.0;
  if (s.rows() == 2) {
    const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    charpoly = [=](double l) { return l * l - tr * l + det; };
    lo = 0.5 * tr;
  } else {
    const double c2 = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0) + s(0, 0) * s(2, 2) - s(0, 2) * s(2, 0) +
                      s(1, 1) * s(2, 2) - s(1, 2) * s(2, 1);
    const double det = s(0, 0) * (s(1, 1) * s(2, 2) - s(1, 2) * s(2, 1)) -
                       s(0, 1) * (s(1, 0) * s(2, 2) - s(1, 2) * s(2, 0)) +
                       s(0, 2) * (s(1, 0) * s(2, 1) - s(1, 1) * s(2, 0));
    charpoly = [=](double l) { return l * l * l - tr * l * l + c2 * l - det; };
    lo = (tr + std::sqrt(std::max(0.0, tr * tr - 3.0 * c2))) / 3.0;
  }
  double hi = tr;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * tr; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (charpoly(mid) > 0.0) hi = mid;
    else lo = mid;
  }
  return std::sqrt(0.5 * (lo + hi));
}

double leibniz_det(const Mat& j) {
  if (j.rows() == 2) return j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0);
  return j(0, 0) * (j(1, 1) * j(2, 2) - j(1, 2) * j(2, 1)) - j(0, 1) * (j(1, 0) * j(2, 2) - j(1, 2) * j(2, 0)) +
         j(0, 2) * (j(1, 0) * j(2, 1) - j(1, 1) * j(2, 0));
}

}  // namespace

TEST_CASE("outer dilatation branches") {
  for (int n : {2, 3, 4}) {
    CHECK(outer_dilatation(Mat::Identity(n, n)) == 1.0);
    CHECK(outer_dilatation(Mat::Zero(n, n)) == 1.0);
    Mat sing = Mat::Identity(n, n);
    sing(n - 1, n - 1) = 0.0;
    CHECK(std::isinf(outer_dilatation(sing)));
    Mat rank_one = Mat::Zero(n, n);
    rank_one(0, n - 1) = 3.0;
    CHECK(std::isinf(outer_dilatation(rank_one)));
  }
  Mat d = Mat::Identity(2, 2);
  d(0, 0) = 2.0;
  CHECK(outer_dilatation(d) == doctest::Approx(2.0).epsilon(1e-14));
  Rng rng = make_stream(501, 0);
  const Mat conformal = 3.0 * random_orthogonal(3, rng);
  CHECK(outer_dilatation(conformal) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("outer dilatation is at least 1 on random nonsingular matrices") {
  Rng rng = make_stream(502, 0);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = uniform_int(2, 4, rng);
    const Mat j = gaussian_matrix(n, rng);
    const double k = outer_dilatation(j);
    CHECK(k >= 1.0 - 1e-12);
  }
}

TEST_CASE("operator norm and determinant against independent oracles") {
  Rng rng = make_stream(503, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = uniform_int(2, 3, rng);
    const Mat j = gaussian_matrix(n, rng);
    const auto nd = operator_norm_and_jacobian(j);
    CHECK(nd.norm == doctest::Approx(largest_singular_value_bisect(j)).epsilon(1e-9));
    CHECK(nd.det == doctest::Approx(leibniz_det(j)).epsilon(1e-10));
  }
}

TEST_CASE("finite differences against a closed-form derivative") {
  auto f = [](const Vec& x) {
    Vec y(3);
    y << x(0) * x(0) * x(1), std::sin(x(1)) + x(2), std::exp(x(0) * x(2));
    return y;
  };
  auto df = [](const Vec& x) {
    Mat d(3, 3);
    d << 2 * x(0) * x(1), x(0) * x(0), 0, 0, std::cos(x(1)), 1, x(2) * std::exp(x(0) * x(2)), 0,
        x(0) * std::exp(x(0) * x(2));
    return d;
  };
  Rng rng = make_stream(504, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec x = ball_point(3, 0.8, rng);
    CHECK((finite_difference_jacobian(f, x) - df(x)).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(richardson_gap(f, x) < 1e-7);
  }
  MapSample with{f, df, "test"}, without{f, nullptr, "test"};
  const Vec x = Vec::Constant(3, 0.2);
  CHECK((with.jacobian(x) - df(x)).norm() == 0.0);
  CHECK((without.jacobian(x) - df(x)).norm() < 1e-7);
}

TEST_CASE("Calderon integral verdicts") {
  auto power = [](double p) { return [p](double t) { return std::pow(t, p); }; };
  CHECK(calderon_check(power(4.0), 3, std::ldexp(1.0, 40), 1e-2).verdict == CalderonVerdict::Converges);
  CHECK(calderon_check(power(3.0), 3, std::ldexp(1.0, 40), 1e-2).verdict == CalderonVerdict::Converges);
  CHECK(calderon_check(power(2.0), 3, std::ldexp(1.0, 40), 1e-2).verdict ==
        CalderonVerdict::DivergesOrInconclusive);
  // n = 4, phi = t^3: the integrand is t^{-1}, divergent.
  CHECK(calderon_check(power(3.0), 4, std::ldexp(1.0, 40), 1e-2).verdict == CalderonVerdict::DivergesOrInconclusive);
  const auto rep = calderon_check(power(4.0), 3, 1024.0, 1e-2);
  CHECK(rep.rows.back().partial == doctest::Approx(0.5 * (1.0 - 1.0 / (1024.0 * 1024.0))).epsilon(1e-9));
  CHECK_THROWS_AS(calderon_check([](double t) { return 2.0 + std::sin(t); }, 3, 1024.0, 1e-2), ValidationError);
  CHECK_THROWS_AS(calderon_check(power(4.0), 2, 1024.0, 1e-2), DomainError);
  CHECK(to_string(CalderonVerdict::Converges) == "converges");
}

TEST_CASE("multiplicity of the complex square") {
  MapSample square{[](const Vec& x) {
                     Vec y(2);
                     y << x(0) * x(0) - x(1) * x(1), 2 * x(0) * x(1);
                     return y;
                   },
                   nullptr, "square"};
  std::vector<Vec> samples;
  const int grid = 400;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      Vec x(2);
      x << -0.9 + 1.8 * i / (grid - 1), -0.9 + 1.8 * j / (grid - 1);
      samples.push_back(x);
    }
  Vec y(2);
  y << 0.25, 0.0;
  const auto rep = multiplicity_estimate(square, samples, y, 0.02);
  CHECK(rep.count == 2);
  const MapSample id{[](const Vec& x) { return x; }, nullptr, "identity"};
  CHECK(multiplicity_estimate(id, samples, y, 0.01).count == 1);
  const MapSample flat{[](const Vec& x) { return Vec(Vec::Zero(x.size())); }, nullptr, "constant"};
  CHECK(multiplicity_estimate(flat, samples, Vec::Zero(2), 0.01).degenerate);
}

TEST_CASE("Orlicz energy and the finite-distortion defect") {
  const MapSample id{[](const Vec& x) { return x; }, [](const Vec& x) { return Mat(Mat::Identity(x.size(), x.size())); },
                     "identity"};
  const auto e = orlicz_energy(id, [](double t) { return t; }, 2, 0.5, 2000, 1);
  CHECK(e.value == doctest::Approx(std::numbers::pi * 0.25).epsilon(1e-12));
  const MapSample fold{[](const Vec& x) {
                         Vec y = x;
                         y(1) = 0.0;
                         return y;
                       },
                       nullptr, "fold"};
  Rng rng = make_stream(505, 0);
  std::vector<Vec> pts;
  for (int k = 0; k < 50; ++k) pts.push_back(ball_point(2, 0.5, rng));
  CHECK(finite_distortion_defect(fold, pts) == 1.0);
  CHECK(finite_distortion_defect(id, pts) == 0.0);
}
