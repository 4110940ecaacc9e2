#include "qmod/distortion.hpp"

#include "qmod/quadrature.hpp"
#include "qmod/sampling.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace qmod {

Mat MapSample::jacobian(const Vec& x) const {
  if (derivative) return derivative(x);
  return finite_difference_jacobian(f, x);
}

NormAndDet operator_norm_and_jacobian(const Mat& j) {
  if (j.rows() != j.cols()) throw ValidationError("operator_norm_and_jacobian: matrix must be square");
  NormAndDet out;
  if (j.size() == 0) return out;
  Eigen::JacobiSVD<Mat> svd(j);
  out.norm = svd.singularValues()(0);
  out.det = j.partialPivLu().determinant();
  return out;
}

double outer_dilatation(const Mat& j) {
  const auto nd = operator_norm_and_jacobian(j);
  if (nd.norm == 0.0) return 1.0;
  const double top = std::pow(nd.norm, static_cast<double>(j.rows()));
  if (std::abs(nd.det) <= 1e-14 * top) return std::numeric_limits<double>::infinity();
  return top / std::abs(nd.det);
}

Mat finite_difference_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h) {
  if (h <= 0.0) h = 1e-5 * std::max(1.0 - x.norm(), 1e-3);
  const Vec f0 = f(x);
  Mat j(f0.size(), x.size());
  for (int k = 0; k < x.size(); ++k) {
    Vec xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    j.col(k) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return j;
}

double richardson_gap(const std::function<Vec(const Vec&)>& f, const Vec& x, double h) {
  if (h <= 0.0) h = 1e-5 * std::max(1.0 - x.norm(), 1e-3);
  return (finite_difference_jacobian(f, x, h) - finite_difference_jacobian(f, x, 0.5 * h)).cwiseAbs().maxCoeff();
}

std::string to_string(CalderonVerdict v) {
  return v == CalderonVerdict::Converges ? "converges" : "diverges/inconclusive";
}

CalderonReport calderon_check(const std::function<double(double)>& phi, int n, double t_max, double tol) {
  if (n < 3) throw DomainError("calderon_check: n must be >= 3");
  if (!(t_max >= 4.0)) throw DomainError("calderon_check: T_max must be >= 4");
  if (!(tol > 0.0)) throw DomainError("calderon_check: tol must be positive");

  // Monotonicity and positivity on a log grid.
  double prev = 0.0;
  const int probes = 2000;
  for (int k = 0; k <= probes; ++k) {
    const double t = std::exp(std::log(t_max) * k / probes);
    const double v = phi(t);
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("calderon_check: phi must be positive and finite");
    if (v < prev * (1.0 - 1e-12)) throw ValidationError("calderon_check: phi is not nondecreasing");
    prev = v;
  }

  const double expo = 1.0 / (n - 2);
  auto integrand = [&](double t) { return std::pow(t / phi(t), expo); };
  CalderonReport rep;
  double total = 0.0, lo = 1.0;
  for (double t = 2.0; t <= t_max * (1.0 + 1e-12); t *= 2.0) {
    CalderonRow row;
    row.t = t;
    row.increment = integrate_adaptive(integrand, lo, t, {}, 1e-12).value;
    total += row.increment;
    row.partial = total;
    rep.rows.push_back(row);
    lo = t;
  }

  const std::size_t m = rep.rows.size();
  const std::size_t tail = std::min<std::size_t>(6, m);
  std::vector<double> ratios;
  for (std::size_t k = m - tail + 1; k < m; ++k) {
    const double a = rep.rows[k - 1].increment;
    ratios.push_back(a > 0.0 ? rep.rows[k].increment / a : 0.0);
  }
  if (!ratios.empty()) {
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    rep.tail_ratio = sorted[sorted.size() / 2];
  }
  // Least-squares slope of log increment against log k over the tail.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (std::size_t k = m - tail; k < m; ++k) {
    const double inc = rep.rows[k].increment;
    if (!(inc > 0.0)) continue;
    const double x = std::log(static_cast<double>(k + 1));
    const double y = std::log(inc);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt >= 2) rep.decay_exponent = -(cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  const bool small = m > 0 && rep.rows.back().increment < tol;
  const bool decaying = (!ratios.empty() && rep.tail_ratio <= 0.75) || rep.decay_exponent >= 1.5;
  if (small && decaying) rep.verdict = CalderonVerdict::Converges;
  return rep;
}

MultiplicityReport multiplicity_estimate(const MapSample& map, const std::vector<Vec>& samples, const Vec& y,
                                         double tol) {
  if (!(tol > 0.0)) throw DomainError("multiplicity_estimate: tol must be positive");
  MultiplicityReport rep;
  if (samples.empty()) return rep;
  std::vector<Vec> images;
  images.reserve(samples.size());
  for (const auto& x : samples) images.push_back(map.f(x));
  double spread = 0.0;
  for (const auto& v : images) spread = std::max(spread, (v - images.front()).norm());
  rep.degenerate = spread < tol;

  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if ((images[i] - y).norm() < tol) hits.push_back(i);
  rep.hits = hits.size();

  // Single-linkage clustering of the hits in the domain.
  std::vector<std::size_t> parent(hits.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t a = 0; a < hits.size(); ++a) {
    for (std::size_t b = a + 1; b < hits.size(); ++b) {
      if ((samples[hits[a]] - samples[hits[b]]).norm() <= 10.0 * tol) parent[find(a)] = find(b);
    }
  }
  for (std::size_t a = 0; a < hits.size(); ++a)
    if (find(a) == a) ++rep.count;
  return rep;
}

EnergyEstimate orlicz_energy(const MapSample& map, const std::function<double(double)>& phi, int n, double radius,
                             std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw ValidationError("orlicz_energy: need samples");
  if (!(radius > 0.0 && radius < 1.0)) throw DomainError("orlicz_energy: radius must lie in (0, 1)");
  Rng rng = make_stream(seed, 31);
  const double vol = unit_sphere_area(n) / n * std::pow(radius, n);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const Vec x = uniform_in_ball(n, radius, rng);
    const double v = vol * phi(operator_norm_and_jacobian(map.jacobian(x)).norm);
    sum += v;
    sum2 += v * v;
  }
  const double c = static_cast<double>(samples);
  EnergyEstimate e;
  e.value = sum / c;
  e.stderr_ = samples > 1 ? std::sqrt(std::max(0.0, (sum2 / c - e.value * e.value) / (c - 1.0))) : 0.0;
  e.samples = samples;
  return e;
}

double finite_distortion_defect(const MapSample& map, const std::vector<Vec>& samples) {
  if (samples.empty()) return 0.0;
  std::size_t bad = 0;
  for (const auto& x : samples) {
    const Mat j = map.jacobian(x);
    if (std::isinf(outer_dilatation(j))) ++bad;
  }
  return static_cast<double>(bad) / static_cast<double>(samples.size());
}

}  // namespace qmod
