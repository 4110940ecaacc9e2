#include "qmod/modulus_solver.hpp"

#include "qmod/sampling.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace qmod {

namespace {

// 3-point Gauss-Legendre on [0, 1].
constexpr double kGlNodes[3] = {0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
constexpr double kGlWeights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

double chunk_length(const Vec& a, const Vec& b, MetricTag metric) {
  const double euclid = (b - a).norm();
  if (metric == MetricTag::Euclidean) return euclid;
  double acc = 0.0;
  for (int k = 0; k < 3; ++k) {
    const Vec x = a + kGlNodes[k] * (b - a);
    acc += kGlWeights[k] * 2.0 / (1.0 - x.squaredNorm());
  }
  return euclid * acc;
}

// Sparse constraint matrix over the cells touched by the family, stored by
// member (row) with local column indices.
struct ConstraintMatrix {
  std::vector<std::size_t> row_start;
  std::vector<std::size_t> col;
  std::vector<double> val;
  std::vector<std::size_t> global_cell;  // local column -> flat grid cell
  std::vector<double> weight;            // per local column

  std::size_t rows() const { return row_start.size() - 1; }
  std::size_t cols() const { return global_cell.size(); }
};

ConstraintMatrix assemble(const GridBox& box, const CurveFamily& family) {
  ConstraintMatrix a;
  std::unordered_map<std::size_t, std::size_t> local;
  a.row_start.push_back(0);
  for (const auto& member : family.members) {
    std::vector<CellLength> acc;
    for (const auto& curve : member) {
      auto part = traverse(box, curve, family.metric);
      acc.insert(acc.end(), part.begin(), part.end());
    }
    std::sort(acc.begin(), acc.end(), [](const CellLength& x, const CellLength& y) { return x.cell < y.cell; });
    const double scale = 1.0 / static_cast<double>(member.size());
    for (std::size_t k = 0; k < acc.size();) {
      std::size_t j = k;
      double len = 0.0;
      while (j < acc.size() && acc[j].cell == acc[k].cell) len += acc[j++].length;
      auto [it, inserted] = local.try_emplace(acc[k].cell, a.global_cell.size());
      if (inserted) {
        a.global_cell.push_back(acc[k].cell);
        a.weight.push_back(cell_volume(box, acc[k].cell, family.metric));
      }
      a.col.push_back(it->second);
      a.val.push_back(len * scale);
      k = j;
    }
    a.row_start.push_back(a.col.size());
  }
  return a;
}

class DualProblem {
 public:
  DualProblem(const ConstraintMatrix& a, int n)
      : a_(a), n_(n), expo_(1.0 / (n - 1)), s_(a.cols()), rho_(a.cols()), arho_(a.rows()) {}

  // Evaluates g(lambda) and leaves rho(lambda), A rho in the work buffers.
  double evaluate(const std::vector<double>& lambda) {
    std::fill(s_.begin(), s_.end(), 0.0);
    for (std::size_t r = 0; r < a_.rows(); ++r) {
      const double l = lambda[r];
      if (l == 0.0) continue;
      for (std::size_t k = a_.row_start[r]; k < a_.row_start[r + 1]; ++k) s_[a_.col[k]] += l * a_.val[k];
    }
    double penalty = 0.0;
    for (std::size_t i = 0; i < s_.size(); ++i) {
      const double w = a_.weight[i];
      rho_[i] = s_[i] > 0.0 ? std::pow(s_[i] / (n_ * w), expo_) : 0.0;
      penalty += w * std::pow(rho_[i], n_);
    }
    double lin = 0.0;
    for (std::size_t r = 0; r < a_.rows(); ++r) {
      double acc = 0.0;
      for (std::size_t k = a_.row_start[r]; k < a_.row_start[r + 1]; ++k) acc += a_.val[k] * rho_[a_.col[k]];
      arho_[r] = acc;
      lin += lambda[r];
    }
    return lin - (n_ - 1) * penalty;
  }

  const std::vector<double>& rho() const { return rho_; }
  const std::vector<double>& a_rho() const { return arho_; }

  double primal(const std::vector<double>& rho) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) acc += a_.weight[i] * std::pow(rho[i], n_);
    return acc;
  }

 private:
  const ConstraintMatrix& a_;
  int n_;
  double expo_;
  std::vector<double> s_, rho_, arho_;
};

}  // namespace

CurveFamily CurveFamily::from_curves(std::vector<Polyline> curves, MetricTag metric) {
  CurveFamily f;
  f.metric = metric;
  f.members.reserve(curves.size());
  for (auto& c : curves) f.members.push_back({std::move(c)});
  return f;
}

void CurveFamily::validate() const {
  for (const auto& member : members) {
    if (member.empty()) throw ValidationError("CurveFamily: empty bundle");
    for (const auto& curve : member) {
      if (curve.size() < 2) throw ValidationError("CurveFamily: polyline needs >= 2 vertices");
      double len = 0.0;
      for (std::size_t k = 0; k < curve.size(); ++k) {
        if (metric == MetricTag::Hyperbolic && !(curve[k].norm() < 1.0)) {
          throw ValidationError("CurveFamily: vertex outside the unit ball");
        }
        if (k > 0) len += (curve[k] - curve[k - 1]).norm();
      }
      if (!(len > 0.0) || !std::isfinite(len)) throw ValidationError("CurveFamily: curve of zero length");
    }
  }
}

std::size_t GridBox::cell_count() const {
  std::size_t c = 1;
  for (int k : cells_per_axis) c *= static_cast<std::size_t>(k);
  return c;
}

Vec GridBox::cell_size() const {
  Vec h(dim());
  for (int d = 0; d < dim(); ++d) h(d) = (hi(d) - lo(d)) / cells_per_axis[d];
  return h;
}

Vec GridBox::cell_center(std::size_t flat) const {
  const Vec h = cell_size();
  Vec c(dim());
  for (int d = 0; d < dim(); ++d) {
    const auto idx = flat % static_cast<std::size_t>(cells_per_axis[d]);
    flat /= static_cast<std::size_t>(cells_per_axis[d]);
    c(d) = lo(d) + (static_cast<double>(idx) + 0.5) * h(d);
  }
  return c;
}

bool GridBox::contains(const Vec& x) const {
  for (int d = 0; d < dim(); ++d)
    if (x(d) < lo(d) || x(d) > hi(d)) return false;
  return true;
}

GridBox GridBox::cube(int n, double half_width, int cells) {
  return GridBox{Vec::Constant(n, -half_width), Vec::Constant(n, half_width), std::vector<int>(n, cells)};
}

double cell_volume(const GridBox& box, std::size_t flat, MetricTag metric) {
  const Vec h = box.cell_size();
  const double euclid = h.prod();
  if (metric == MetricTag::Euclidean) return euclid;
  const double s = box.cell_center(flat).squaredNorm();
  if (s >= 1.0) return std::numeric_limits<double>::infinity();
  return euclid * std::pow(2.0 / (1.0 - s), box.dim());
}

std::vector<CellLength> traverse(const GridBox& box, const Polyline& curve, MetricTag metric) {
  const int n = box.dim();
  const Vec h = box.cell_size();
  std::vector<CellLength> out;
  std::vector<double> ts;
  for (std::size_t seg = 0; seg + 1 < curve.size(); ++seg) {
    const Vec& p = curve[seg];
    const Vec& q = curve[seg + 1];
    if (!box.contains(p) || !box.contains(q)) throw ValidationError("traverse: curve leaves the grid box");
    ts.assign({0.0, 1.0});
    for (int d = 0; d < n; ++d) {
      const double a = std::min(p(d), q(d));
      const double b = std::max(p(d), q(d));
      if (b - a <= 0.0) continue;
      const long first = static_cast<long>(std::ceil((a - box.lo(d)) / h(d)));
      const long last = static_cast<long>(std::floor((b - box.lo(d)) / h(d)));
      for (long k = first; k <= last; ++k) {
        const double t = (box.lo(d) + static_cast<double>(k) * h(d) - p(d)) / (q(d) - p(d));
        if (t > 0.0 && t < 1.0) ts.push_back(t);
      }
    }
    std::sort(ts.begin(), ts.end());
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
      if (ts[k + 1] - ts[k] <= 0.0) continue;
      const Vec a = p + ts[k] * (q - p);
      const Vec b = p + ts[k + 1] * (q - p);
      const Vec mid = 0.5 * (a + b);
      std::size_t flat = 0, stride = 1;
      for (int d = 0; d < n; ++d) {
        long idx = static_cast<long>(std::floor((mid(d) - box.lo(d)) / h(d)));
        idx = std::clamp(idx, 0L, static_cast<long>(box.cells_per_axis[d]) - 1);
        flat += static_cast<std::size_t>(idx) * stride;
        stride *= static_cast<std::size_t>(box.cells_per_axis[d]);
      }
      out.push_back({flat, chunk_length(a, b, metric)});
    }
  }
  std::sort(out.begin(), out.end(), [](const CellLength& x, const CellLength& y) { return x.cell < y.cell; });
  std::vector<CellLength> merged;
  for (const auto& c : out) {
    if (!merged.empty() && merged.back().cell == c.cell) {
      merged.back().length += c.length;
    } else {
      merged.push_back(c);
    }
  }
  return merged;
}

ModulusResult modulus_solve(const GridBox& box, const CurveFamily& family, int n,
                            const ModulusOptions& options) {
  if (n < 2 || box.dim() != n) throw ValidationError("modulus_solve: dimension mismatch");
  if (!(options.tol > 0.0)) throw DomainError("modulus_solve: tol must be positive");
  if (box.cell_count() > kMaxGridCells) throw ValidationError("modulus_solve: grid exceeds 2^22 cells");
  family.validate();

  ModulusResult result;
  result.field.box = box;
  result.field.metric = family.metric;
  result.field.rho.assign(box.cell_count(), 0.0);
  result.field.vol_weights.resize(box.cell_count());
  for (std::size_t i = 0; i < box.cell_count(); ++i) result.field.vol_weights[i] = cell_volume(box, i, family.metric);
  if (family.size() == 0) return result;

  const ConstraintMatrix a = assemble(box, family);
  for (std::size_t i = 0; i < a.cols(); ++i) {
    if (!std::isfinite(a.weight[i])) throw ValidationError("modulus_solve: curve crosses a cell outside the ball");
  }
  const std::size_t m = a.rows();
  DualProblem dual(a, n);

  // Start from the best multiple of the all-ones multiplier.
  std::vector<double> lambda(m, 1.0);
  {
    const double g1 = dual.evaluate(lambda);
    const double k = (static_cast<double>(m) - g1) / (n - 1);  // sum w rho(1)^n
    const double p = static_cast<double>(n) / (n - 1);
    const double c = std::pow(static_cast<double>(m) / (p * (n - 1) * k), n - 1.0);
    std::fill(lambda.begin(), lambda.end(), c);
  }

  std::vector<double> prev = lambda, y = lambda, grad(m), trial(m);
  double step_inv = 1.0;  // Lipschitz estimate L
  double momentum_t = 1.0;
  double g_lambda = dual.evaluate(lambda);
  double gap = std::numeric_limits<double>::infinity();
  double violation = std::numeric_limits<double>::infinity();
  std::vector<double> best_rho;
  double best_primal = std::numeric_limits<double>::infinity();
  double best_dual = -std::numeric_limits<double>::infinity();
  std::vector<double> best_lambda = lambda;

  std::size_t it = 0;
  for (; it < options.max_iterations; ++it) {
    const double gy = dual.evaluate(y);
    for (std::size_t r = 0; r < m; ++r) grad[r] = 1.0 - dual.a_rho()[r];

    // Certificate from the primal recovery at y.
    double min_arho = std::numeric_limits<double>::infinity();
    for (double v : dual.a_rho()) min_arho = std::min(min_arho, v);
    violation = std::max(0.0, 1.0 - min_arho);
    if (min_arho > 0.0) {
      const double scale = 1.0 / min_arho;
      const double primal = dual.primal(dual.rho()) * std::pow(scale, n);
      if (primal < best_primal) {
        best_primal = primal;
        best_rho = dual.rho();
        for (double& v : best_rho) v *= scale;
      }
    }
    if (gy > best_dual) {
      best_dual = gy;
      best_lambda = y;
    }
    gap = (best_primal - best_dual) / std::max(best_primal, std::numeric_limits<double>::min());
    if (gap <= options.tol && violation <= options.tol) break;

    // Backtracking projected gradient step from y.
    double g_trial = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      double lin = 0.0, quad = 0.0;
      for (std::size_t r = 0; r < m; ++r) {
        trial[r] = std::max(0.0, y[r] + grad[r] / step_inv);
        const double d = trial[r] - y[r];
        lin += grad[r] * d;
        quad += d * d;
      }
      g_trial = dual.evaluate(trial);
      if (g_trial >= gy + lin - 0.5 * step_inv * quad - 1e-15 * std::abs(gy)) break;
      step_inv *= 2.0;
    }

    // FISTA momentum with function-value restart.
    if (g_trial < g_lambda) {
      momentum_t = 1.0;
      y = lambda;
      step_inv *= 0.9;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum_t * momentum_t));
    const double beta = (momentum_t - 1.0) / t_next;
    prev = lambda;
    lambda = trial;
    g_lambda = g_trial;
    for (std::size_t r = 0; r < m; ++r) y[r] = std::max(0.0, lambda[r] + beta * (lambda[r] - prev[r]));
    momentum_t = t_next;
    step_inv *= 0.95;
  }

  result.certificate.iterations = it;
  result.certificate.dual_bound = best_dual;
  result.certificate.max_violation = violation;
  if (!(gap <= options.tol && violation <= options.tol)) {
    std::ostringstream msg;
    msg << "modulus_solve: no convergence after " << it << " iterations (relative gap " << gap
        << ", violation " << violation << ", primal " << best_primal << ", dual " << best_dual << ")";
    throw ConvergenceError(msg.str());
  }
  result.certificate.objective = best_primal;
  result.value = best_primal;
  result.duals = best_lambda;
  for (std::size_t i = 0; i < a.cols(); ++i) result.field.rho[a.global_cell[i]] = best_rho[i];
  return result;
}

CurveFamily radial_ring_family(int n, double rho1, double rho2, std::size_t directions, MetricTag metric,
                               std::size_t bundle_size) {
  if (!(0.0 < rho1 && rho1 < rho2)) throw DomainError("radial_ring_family: need 0 < rho1 < rho2");
  if (metric == MetricTag::Hyperbolic && !(rho2 < 1.0)) throw DomainError("radial_ring_family: rho2 >= 1");
  if (bundle_size == 0) bundle_size = 1;
  const auto dirs = low_discrepancy_directions(n, directions);
  CurveFamily family;
  family.metric = metric;
  family.members.resize(directions);
  if (bundle_size == 1) {
    for (std::size_t k = 0; k < directions; ++k) family.members[k].push_back({rho1 * dirs[k], rho2 * dirs[k]});
    return family;
  }
  // Fine directions are assigned to their nearest member direction, so each
  // bundle fans over the member's Voronoi cell on the sphere.
  const auto fine = low_discrepancy_directions(n, directions * bundle_size, 7);
  for (const Vec& u : fine) {
    std::size_t best = 0;
    double best_dot = -2.0;
    for (std::size_t k = 0; k < directions; ++k) {
      const double d = u.dot(dirs[k]);
      if (d > best_dot) {
        best_dot = d;
        best = k;
      }
    }
    family.members[best].push_back({rho1 * u, rho2 * u});
  }
  for (std::size_t k = 0; k < directions; ++k) {
    if (family.members[k].empty()) family.members[k].push_back({rho1 * dirs[k], rho2 * dirs[k]});
  }
  return family;
}

nlohmann::json to_json(const ModulusCertificate& cert) {
  return nlohmann::json{{"objective", cert.objective},
                        {"dual_bound", cert.dual_bound},
                        {"max_violation", cert.max_violation},
                        {"iterations", cert.iterations}};
}

}  // namespace qmod
