#include "qmod/mobius.hpp"

#include "qmod/geometry.hpp"

#include <nlohmann/json.hpp>

#include <deque>
#include <fstream>
#include <limits>
#include <map>

namespace qmod {

namespace {

constexpr double kLorentzTol = 1e-10;

Mat lorentz_form(int n) {
  Mat j = Mat::Identity(n + 1, n + 1);
  j(n, n) = -1.0;
  return j;
}

// Gram-Schmidt with respect to the Lorentz form: the last column is made
// unit timelike, the others unit spacelike and mutually orthogonal.
Mat lorentz_orthonormalize(Mat l) {
  const int n = static_cast<int>(l.rows()) - 1;
  Vec t = l.col(n);
  t /= std::sqrt(-lorentz_inner(t, t));
  l.col(n) = t;
  for (int j = 0; j < n; ++j) {
    Vec c = l.col(j);
    c += lorentz_inner(c, t) * t;
    for (int k = 0; k < j; ++k) {
      const Vec ck = l.col(k);
      c -= lorentz_inner(c, ck) * ck;
    }
    c /= std::sqrt(lorentz_inner(c, c));
    l.col(j) = c;
  }
  return l;
}

}  // namespace

double lorentz_inner(const Vec& u, const Vec& v) {
  const Eigen::Index n = u.size() - 1;
  return u.head(n).dot(v.head(n)) - u(n) * v(n);
}

Vec to_hyperboloid(const Vec& x) {
  const Eigen::Index n = x.size();
  const double s = x.squaredNorm();
  Vec X(n + 1);
  X.head(n) = (2.0 / (1.0 - s)) * x;
  X(n) = (1.0 + s) / (1.0 - s);
  return X;
}

Vec from_hyperboloid(const Vec& X) {
  const Eigen::Index n = X.size() - 1;
  return X.head(n) / (1.0 + X(n));
}

MobiusMotion MobiusMotion::identity(int n) { return MobiusMotion(Mat::Identity(n + 1, n + 1)); }

MobiusMotion MobiusMotion::from_lorentz(const Mat& lorentz) {
  if (lorentz.rows() != lorentz.cols() || lorentz.rows() < 2) {
    throw ValidationError("Lorentz matrix must be square of size n+1 >= 2");
  }
  MobiusMotion m(lorentz);
  if (m.lorentz_defect() > kLorentzTol) {
    throw ValidationError("matrix does not preserve the Lorentz form");
  }
  if (lorentz(lorentz.rows() - 1, lorentz.cols() - 1) <= 0.0) {
    throw ValidationError("Lorentz matrix reverses time orientation");
  }
  return m;
}

Vec MobiusMotion::apply(const Vec& x) const {
  if (x.size() != dim()) throw ValidationError("apply: dimension mismatch");
  require_in_ball(x, "apply");
  return from_hyperboloid(lorentz_ * to_hyperboloid(x));
}

MobiusMotion MobiusMotion::inverse() const {
  const Mat j = lorentz_form(dim());
  return MobiusMotion(j * lorentz_.transpose() * j, pending_);
}

double MobiusMotion::lorentz_defect() const {
  const Mat j = lorentz_form(dim());
  return (lorentz_.transpose() * j * lorentz_ - j).cwiseAbs().maxCoeff();
}

MobiusMotion compose(const MobiusMotion& outer, const MobiusMotion& inner) {
  if (outer.dim() != inner.dim()) throw ValidationError("compose: dimension mismatch");
  Mat product = outer.lorentz_ * inner.lorentz_;
  int pending = outer.pending_ + inner.pending_ + 1;
  if (pending >= kRenormalizeEvery) {
    product = lorentz_orthonormalize(std::move(product));
    pending = 0;
  }
  return MobiusMotion(std::move(product), pending);
}

MobiusMotion ball_translation(const Vec& a) {
  require_in_ball(a, "make_motion");
  const int n = static_cast<int>(a.size());
  const double r = a.norm();
  Mat l = Mat::Identity(n + 1, n + 1);
  if (r > 0.0) {
    // Boost of rapidity t = h(0, a) along a/|a|, taking the image of a to
    // the hyperboloid origin.
    const Vec u = a / r;
    const double t = hyperbolic_radius(r);
    const double ch = std::cosh(t);
    const double sh = std::sinh(t);
    l.topLeftCorner(n, n) += (ch - 1.0) * u * u.transpose();
    l.topRightCorner(n, 1) = -sh * u;
    l.bottomLeftCorner(1, n) = -sh * u.transpose();
    l(n, n) = ch;
  }
  return MobiusMotion::from_lorentz(l);
}

MobiusMotion make_motion(const Vec& a, const Mat& rotation) {
  const int n = static_cast<int>(a.size());
  if (rotation.rows() != n || rotation.cols() != n) {
    throw ValidationError("make_motion: rotation must be n x n");
  }
  if ((rotation.transpose() * rotation - Mat::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10) {
    throw ValidationError("make_motion: R is not orthogonal");
  }
  Mat r = Mat::Identity(n + 1, n + 1);
  r.topLeftCorner(n, n) = rotation;
  return compose(MobiusMotion::from_lorentz(r), ball_translation(a));
}

DiscreteGroup DiscreteGroup::trivial(int n) {
  return DiscreteGroup(n, {}, 0, kDefaultDedupTol, {GroupElement{{}, MobiusMotion::identity(n)}});
}

long DiscreteGroup::find(const MobiusMotion& motion) const {
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    if (matrix_max_distance(elements_[i].motion, motion) <= dedup_tol_) return static_cast<long>(i);
  }
  return -1;
}

DiscreteGroup generate_group(const std::vector<MobiusMotion>& generators, int n, int depth,
                             double dedup_tol) {
  if (depth < 0) throw DomainError("generate_group: depth must be >= 0");
  for (const auto& g : generators) {
    if (g.dim() != n) throw ValidationError("generate_group: generator dimension mismatch");
  }

  // Letter 2k is generator k, letter 2k+1 its inverse.
  std::vector<MobiusMotion> letters;
  for (const auto& g : generators) {
    letters.push_back(g);
    letters.push_back(g.inverse());
  }

  std::vector<GroupElement> elements{GroupElement{{}, MobiusMotion::identity(n)}};
  // Keyed by the (n, n) entry: cosh of the displacement of the origin.
  std::multimap<double, std::size_t> index{{1.0, 0}};
  auto is_new = [&](const MobiusMotion& m) {
    const double key = m.lorentz()(n, n);
    for (auto it = index.lower_bound(key - dedup_tol); it != index.end() && it->first <= key + dedup_tol;
         ++it) {
      if (matrix_max_distance(elements[it->second].motion, m) <= dedup_tol) return false;
    }
    return true;
  };

  struct Node {
    std::size_t element;
    int last_letter;
  };
  std::deque<Node> frontier{{0, -1}};
  for (int level = 0; level < depth; ++level) {
    std::deque<Node> next;
    for (const Node& node : frontier) {
      for (int letter = 0; letter < static_cast<int>(letters.size()); ++letter) {
        if (node.last_letter >= 0 && letter == (node.last_letter ^ 1)) continue;
        MobiusMotion m = compose(elements[node.element].motion, letters[letter]);
        if (!is_new(m)) continue;
        Word w = elements[node.element].word;
        w.push_back((letter % 2 == 0) ? letter / 2 + 1 : -(letter / 2 + 1));
        index.emplace(m.lorentz()(n, n), elements.size());
        elements.push_back(GroupElement{std::move(w), std::move(m)});
        next.push_back({elements.size() - 1, letter});
      }
    }
    frontier = std::move(next);
  }
  return DiscreteGroup(n, generators, depth, dedup_tol, std::move(elements));
}

GroupActionReport verify_group_action(const DiscreteGroup& group, const std::vector<Vec>& samples,
                                      double radius) {
  GroupActionReport report;
  report.radius = radius;
  for (const Vec& x : samples) {
    require_in_ball(x, "verify_group_action");
    GroupActionSample s;
    s.point = x;
    s.min_displacement = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < group.size(); ++i) {
      const Vec tx = group.elements()[i].motion.apply(x);
      s.min_displacement = std::min(s.min_displacement, (tx - x).norm());
      if (hyp_distance(x, tx) < 2.0 * radius) ++s.near_count;
    }
    s.fixed_point_free = !(s.min_displacement < 1e-9);
    report.fixed_point_free = report.fixed_point_free && s.fixed_point_free;
    report.max_near_count = std::max(report.max_near_count, s.near_count);
    report.samples.push_back(std::move(s));
  }
  return report;
}

DiscreteGroup parse_group_definition(const nlohmann::json& doc) {
  try {
    const int n = doc.at("n").get<int>();
    if (n < 2) throw ValidationError("group definition: n must be >= 2");
    const int depth = doc.value("depth", 0);
    const double tol = doc.value("dedup_tol", kDefaultDedupTol);
    std::vector<MobiusMotion> gens;
    for (const auto& g : doc.value("generators", nlohmann::json::array())) {
      const auto a_raw = g.at("a").get<std::vector<double>>();
      if (static_cast<int>(a_raw.size()) != n) throw ValidationError("group definition: |a| != n");
      Vec a = Eigen::Map<const Vec>(a_raw.data(), n);
      Mat r = Mat::Identity(n, n);
      if (g.contains("R")) {
        const auto rows = g.at("R").get<std::vector<std::vector<double>>>();
        if (static_cast<int>(rows.size()) != n) throw ValidationError("group definition: R must be n x n");
        for (int i = 0; i < n; ++i) {
          if (static_cast<int>(rows[i].size()) != n) {
            throw ValidationError("group definition: R must be n x n");
          }
          for (int j = 0; j < n; ++j) r(i, j) = rows[i][j];
        }
      }
      gens.push_back(make_motion(a, r));
    }
    return generate_group(gens, n, depth, tol);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("group definition: ") + e.what());
  } catch (const DomainError& e) {
    throw ValidationError(std::string("group definition: ") + e.what());
  }
}

DiscreteGroup load_group_definition(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open group file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("group file " + path.string() + ": " + e.what());
  }
  return parse_group_definition(doc);
}

}  // namespace qmod
