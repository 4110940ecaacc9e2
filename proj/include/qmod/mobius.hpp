#pragma once

#include "qmod/core.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <filesystem>
#include <vector>

namespace qmod {

/// A Möbius automorphism of the unit ball B^n, stored as an (n+1)x(n+1)
/// Lorentz matrix acting on the hyperboloid model {X : <X,X>_J = -1, X_n > 0}
/// with J = diag(1, ..., 1, -1). Composition is matrix multiplication.
class MobiusMotion {
 public:
  static MobiusMotion identity(int n);

  /// Wraps a Lorentz matrix; throws ValidationError if it does not preserve
  /// the Lorentz form to 1e-10 or flips the time orientation.
  static MobiusMotion from_lorentz(const Mat& lorentz);

  int dim() const { return static_cast<int>(lorentz_.rows()) - 1; }
  const Mat& lorentz() const { return lorentz_; }

  Vec apply(const Vec& x) const;
  MobiusMotion inverse() const;

  /// max |L^T J L - J| entrywise.
  double lorentz_defect() const;

  friend MobiusMotion compose(const MobiusMotion& outer, const MobiusMotion& inner);

 private:
  explicit MobiusMotion(Mat lorentz, int pending = 0)
      : lorentz_(std::move(lorentz)), pending_(pending) {}

  Mat lorentz_;
  // Compositions accumulated since the last Lorentz re-orthonormalisation.
  int pending_ = 0;
};

/// Standard ball automorphism sigma_a (sending a to 0) followed by the
/// orthogonal map R.
MobiusMotion make_motion(const Vec& a, const Mat& rotation);

/// Ball automorphism sending a to 0 (the R = I case of make_motion).
MobiusMotion ball_translation(const Vec& a);

inline Vec apply(const MobiusMotion& motion, const Vec& x) { return motion.apply(x); }
inline MobiusMotion inverse(const MobiusMotion& motion) { return motion.inverse(); }

/// outer o inner: apply(compose(a, b), x) == apply(a, apply(b, x)).
MobiusMotion compose(const MobiusMotion& outer, const MobiusMotion& inner);

/// Number of compositions after which the Lorentz matrix is re-orthonormalised.
inline constexpr int kRenormalizeEvery = 32;

/// Lorentz form <u, v>_J = sum_{i<n} u_i v_i - u_n v_n.
double lorentz_inner(const Vec& u, const Vec& v);

/// Ball point -> hyperboloid point.
Vec to_hyperboloid(const Vec& x);
/// Hyperboloid point -> ball point.
Vec from_hyperboloid(const Vec& X);

inline double matrix_max_distance(const MobiusMotion& a, const MobiusMotion& b) {
  return (a.lorentz() - b.lorentz()).cwiseAbs().maxCoeff();
}

/// Word letters: +(k+1) is generator k, -(k+1) its inverse.
using Word = std::vector<int>;

struct GroupElement {
  Word word;
  MobiusMotion motion;
};

/// A finitely generated group of ball automorphisms, truncated to all reduced
/// words of length <= depth. Element 0 is always the identity.
class DiscreteGroup {
 public:
  DiscreteGroup(int n, std::vector<MobiusMotion> generators, int depth, double dedup_tol,
                std::vector<GroupElement> elements)
      : n_(n),
        generators_(std::move(generators)),
        depth_(depth),
        dedup_tol_(dedup_tol),
        elements_(std::move(elements)) {}

  static DiscreteGroup trivial(int n);

  int dim() const { return n_; }
  int depth() const { return depth_; }
  double dedup_tol() const { return dedup_tol_; }
  const std::vector<MobiusMotion>& generators() const { return generators_; }
  const std::vector<GroupElement>& elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  bool is_trivial() const { return elements_.size() == 1; }

  /// Index of a stored element within dedup_tol of `motion`, or -1.
  long find(const MobiusMotion& motion) const;

 private:
  int n_;
  std::vector<MobiusMotion> generators_;
  int depth_;
  double dedup_tol_;
  std::vector<GroupElement> elements_;
};

inline constexpr double kDefaultDedupTol = 1e-9;

DiscreteGroup generate_group(const std::vector<MobiusMotion>& generators, int n, int depth,
                             double dedup_tol = kDefaultDedupTol);

struct GroupActionSample {
  Vec point;
  double min_displacement = 0.0;  // Euclidean, over non-identity elements
  bool fixed_point_free = true;
  std::size_t near_count = 0;  // #{T != I : h(x, T x) < 2 radius}
};

struct GroupActionReport {
  double radius = 0.0;
  std::vector<GroupActionSample> samples;
  bool fixed_point_free = true;
  std::size_t max_near_count = 0;
};

/// Heuristic audit of the two standing assumptions on G: no fixed points in
/// the ball and a locally finite orbit (checked on the truncated group only).
GroupActionReport verify_group_action(const DiscreteGroup& group, const std::vector<Vec>& samples,
                                      double radius);

/// Group definition file: {"n": int, "generators": [{"a": [...], "R": [[...]]}], "depth": int}.
/// "R" is optional (identity); "dedup_tol" is optional.
DiscreteGroup parse_group_definition(const nlohmann::json& doc);
DiscreteGroup load_group_definition(const std::filesystem::path& path);

}  // namespace qmod
