#include "qmod/geometry.hpp"

#include "qmod/sampling.hpp"

#include <algorithm>
#include <limits>

namespace qmod {

double hyp_distance(const Vec& x, const Vec& y) {
  require_in_ball(x, "hyp_distance");
  require_in_ball(y, "hyp_distance");
  const double d2 = (x - y).squaredNorm();
  if (d2 == 0.0) return 0.0;
  const double t = std::sqrt(d2 / (d2 + (1.0 - x.squaredNorm()) * (1.0 - y.squaredNorm())));
  return 2.0 * std::atanh(t);
}

QuotientPoint::QuotientPoint(Vec representative, GroupRef g)
    : rep(std::move(representative)), group(std::move(g)) {
  if (!group) throw ValidationError("QuotientPoint: null group");
  require_in_ball(rep, "QuotientPoint");
}

double quotient_distance(const DiscreteGroup& group, const Vec& x, const Vec& y) {
  double best = hyp_distance(x, y);
  for (std::size_t i = 1; i < group.size(); ++i) {
    const auto& g = group.elements()[i].motion;
    best = std::min({best, hyp_distance(x, g.apply(y)), hyp_distance(g.apply(x), y)});
  }
  return best;
}

double normal_radius(const DiscreteGroup& group, const Vec& x0, double cap) {
  require_in_ball(x0, "normal_radius");
  double best = cap;
  for (std::size_t i = 1; i < group.size(); ++i) {
    best = std::min(best, 0.5 * hyp_distance(x0, group.elements()[i].motion.apply(x0)));
  }
  return best;
}

bool dirichlet_contains(const DiscreteGroup& group, const Vec& x0, const Vec& x) {
  const double d0 = hyp_distance(x, x0);
  for (std::size_t i = 1; i < group.size(); ++i) {
    if (!(d0 < hyp_distance(x, group.elements()[i].motion.apply(x0)))) return false;
  }
  return true;
}

CurveLength quotient_curve_length(const DiscreteGroup& group, const std::vector<Vec>& polyline,
                                  double rel_tol, int max_refinements) {
  if (polyline.size() < 2) throw ValidationError("quotient_curve_length: need >= 2 vertices");
  auto length_of = [&](const std::vector<Vec>& pts) {
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) sum += quotient_distance(group, pts[k], pts[k + 1]);
    return sum;
  };
  CurveLength out;
  std::vector<Vec> pts = polyline;
  out.length = length_of(pts);
  for (int it = 0; it < max_refinements; ++it) {
    std::vector<Vec> finer;
    finer.reserve(2 * pts.size());
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      finer.push_back(pts[k]);
      finer.push_back(0.5 * (pts[k] + pts[k + 1]));
    }
    finer.push_back(pts.back());
    const double next = length_of(finer);
    out.refinements = it + 1;
    const double change = std::abs(next - out.length);
    out.length = next;
    pts = std::move(finer);
    if (change <= rel_tol * std::max(next, std::numeric_limits<double>::min())) {
      out.converged = true;
      break;
    }
  }
  return out;
}

ChartedNeighborhood::ChartedNeighborhood(GroupRef group, const Vec& center, double radius)
    : center_(center, group),
      radius_(radius > 0.0 ? radius : normal_radius(*group, center)),
      to_chart_(ball_translation(center)),
      from_chart_(to_chart_.inverse()) {
  if (group->dim() != center.size()) throw ValidationError("ChartedNeighborhood: dimension mismatch");
  if (radius_ > normal_radius(*group, center) * (1.0 + 1e-12)) {
    throw ValidationError("ChartedNeighborhood: radius exceeds the normal radius");
  }
}

ChartedNeighborhood ChartedNeighborhood::trivial(int n, double radius) {
  return ChartedNeighborhood(std::make_shared<const DiscreteGroup>(DiscreteGroup::trivial(n)),
                             Vec::Zero(n), radius);
}

MetricComparison estimate_metric_comparison(int n, double r0, std::size_t pairs, std::uint64_t seed) {
  const double rho0 = euclidean_radius(r0);
  Rng rng = make_stream(seed, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MetricComparison mc;
  mc.c1 = std::numeric_limits<double>::infinity();
  auto record = [&](const Vec& a, const Vec& b) {
    const double h = hyp_distance(a, b);
    if (h <= 0.0) return;
    const double ratio = (a - b).norm() / h;
    mc.c1 = std::min(mc.c1, ratio);
    mc.max_ratio = std::max(mc.max_ratio, ratio);
    ++mc.pairs;
  };
  for (std::size_t k = 0; k < pairs; ++k) {
    switch (k % 3) {
      case 0:  // generic pair
        record(uniform_in_ball(n, rho0, rng), uniform_in_ball(n, rho0, rng));
        break;
      case 1:  // through the centre
        record(Vec::Zero(n), uniform_in_ball(n, rho0, rng));
        break;
      default: {  // close pair near the boundary sphere, where the ratio is smallest
        const Vec u = random_direction(n, rng);
        const double s = rho0 * (1.0 - 1e-3 * unif(rng));
        const Vec a = s * u;
        Vec b = a + 1e-4 * rho0 * random_direction(n, rng);
        if (b.norm() >= rho0) b *= rho0 * (1.0 - 1e-12) / b.norm();
        record(a, b);
      }
    }
  }
  return mc;
}

std::vector<Vec> low_discrepancy_directions(int n, std::size_t count, std::uint64_t seed) {
  std::vector<Vec> dirs;
  dirs.reserve(count);
  if (n == 2) {
    for (std::size_t k = 0; k < count; ++k) {
      const double a = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(count);
      Vec u(2);
      u << std::cos(a), std::sin(a);
      dirs.push_back(u);
    }
  } else if (n == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t k = 0; k < count; ++k) {
      const double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(count);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * static_cast<double>(k);
      Vec u(3);
      u << r * std::cos(phi), r * std::sin(phi), z;
      dirs.push_back(u);
    }
  } else {
    Rng rng = make_stream(seed, 17);
    for (std::size_t k = 0; k < count; ++k) dirs.push_back(random_direction(n, rng));
  }
  return dirs;
}

}  // namespace qmod
