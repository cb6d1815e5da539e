#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>

#include "twip/control_math.hpp"

namespace twip {

/// Halfspace set {x : A x <= b}. Rows are stored with unit Euclidean norm.
class Polytope {
 public:
  Polytope() = default;
  /// Throws DomainError on zero or non-finite rows or mismatched sizes.
  Polytope(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

  /// The whole space R^n (no rows).
  static Polytope universe(Eigen::Index dim);
  /// Axis-aligned box lo <= x <= hi; infinite bounds are skipped.
  static Polytope box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& b() const { return b_; }
  Eigen::Index rows() const { return A_.rows(); }
  Eigen::Index dim() const { return A_.cols(); }

  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  bool contains_origin() const { return rows() == 0 || b_.minCoeff() >= 0.0; }

  /// max over the set of d'x; +inf if unbounded, -inf if empty.
  double support(const Eigen::VectorXd& direction) const;
  bool is_empty() const;

  Polytope intersect(const Polytope& other) const;
  /// {x : A x <= s b}
  Polytope scaled(double s) const;
  /// Removes rows implied by the others (support check, tolerance tol).
  Polytope without_redundant_rows(double tol = 1e-9) const;

 private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
};

/// {x : x' P x <= level}; level == 0 denotes the single point {0}.
struct Ellipsoid {
  SymmetricMatrix P;
  double level = 1.0;

  Ellipsoid() = default;
  Ellipsoid(SymmetricMatrix shape, double level_);

  /// max over the set of d'x = sqrt(level * d' P^-1 d)
  double support(const Eigen::VectorXd& direction) const;
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Closed interval [lo, hi]; empty when lo > hi.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static Interval symmetric(double half_width) { return {-half_width, half_width}; }
  bool empty() const { return lo > hi; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
  bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
};

/// Zero-centred zonotope {G xi : |xi|_inf <= 1}; a single generator is a segment.
struct Zonotope {
  Eigen::MatrixXd generators;
  double support(const Eigen::VectorXd& direction) const {
    return generators.size() == 0 ? 0.0 : (direction.transpose() * generators).cwiseAbs().sum();
  }
};

struct TightenedPolytope {
  Polytope set;
  bool empty = false;
};

struct TightenedInterval {
  Interval set;
  bool empty = false;
};

/// X - E: every row a'x <= b becomes a'x <= b - h_E(a).
TightenedPolytope pontryagin_diff_ellipsoid(const Polytope& X, const Ellipsoid& E);

/// U - K E for a scalar input: both ends shrink by sqrt(level K P^-1 K').
TightenedInterval pontryagin_diff_interval(const Interval& U, const Eigen::RowVectorXd& K,
                                           const Ellipsoid& E);

struct InvariantSetOptions {
  int max_iterations = 500;
  double tolerance = 1e-9;
};

struct InvariantSetResult {
  Polytope set;
  int iterations = 0;
};

/// Largest set with x in Omega => A_cl x in Omega, x in X, -K x in U, by
/// pre-set iteration with redundancy pruning. Throws SynthesisError when the
/// iteration does not converge within the cap.
InvariantSetResult max_positively_invariant(const Eigen::MatrixXd& A_cl, const Polytope& X,
                                            const Interval& U, const Eigen::RowVectorXd& K,
                                            const InvariantSetOptions& options = {});

/// Robust variant for x+ = A_cl x + w, w in W. Throws SynthesisError if the
/// result is empty or the iteration does not converge.
InvariantSetResult max_robust_positively_invariant(const Eigen::MatrixXd& A_cl, const Polytope& X,
                                                   const Interval& U, const Eigen::RowVectorXd& K,
                                                   const Zonotope& W,
                                                   const InvariantSetOptions& options = {});

/// Largest alpha with {x' P x <= alpha} inside X: min_i b_i^2 / (a_i' P^-1 a_i).
/// Returns +inf for a polytope without rows. Throws DomainError unless b > 0.
double max_ellipsoid_level_in_polytope(const SymmetricMatrix& P, const Polytope& X);

}  // namespace twip
