#include "twip/geometry.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "twip/errors.hpp"
#include "twip/linprog.hpp"

namespace twip {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& M, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), M.cols());
  for (size_t k = 0; k < idx.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = M.row(idx[k]);
  }
  return out;
}

Eigen::VectorXd select_entries(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = v(idx[k]);
  }
  return out;
}

// Input constraint -K x in U as halfspaces.
Polytope input_preimage(const Interval& U, const Eigen::RowVectorXd& K) {
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> offsets;
  if (std::isfinite(U.hi)) {
    rows.push_back(-K.transpose());
    offsets.push_back(U.hi);
  }
  if (std::isfinite(U.lo)) {
    rows.push_back(K.transpose());
    offsets.push_back(-U.lo);
  }
  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), K.size());
  Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    A.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    b(static_cast<Eigen::Index>(i)) = offsets[i];
  }
  return Polytope(A, b);
}

InvariantSetResult preset_iteration(const Eigen::MatrixXd& A_cl, const Polytope& X, const Interval& U,
                                    const Eigen::RowVectorXd& K, const Zonotope* W,
                                    const InvariantSetOptions& options) {
  const Eigen::Index n = A_cl.rows();
  if (A_cl.cols() != n || X.dim() != n || K.size() != n) {
    throw DomainError("invariant set: dimension mismatch");
  }
  Polytope omega = X.intersect(input_preimage(U, K)).without_redundant_rows(options.tolerance);
  if (omega.rows() == 0) {
    return {omega, 0};
  }
  for (int it = 0; it < options.max_iterations; ++it) {
    if (omega.is_empty()) {
      throw SynthesisError("invariant set: constraint set became empty");
    }
    // Pre-set rows: a' (A_cl x + w) <= b for all w in W.
    const Eigen::MatrixXd pre_A = omega.A() * A_cl;
    Eigen::VectorXd pre_b = omega.b();
    if (W != nullptr) {
      for (Eigen::Index i = 0; i < omega.rows(); ++i) {
        pre_b(i) -= W->support(omega.A().row(i).transpose());
      }
    }
    std::vector<Eigen::Index> fresh;
    for (Eigen::Index i = 0; i < pre_A.rows(); ++i) {
      const double norm = pre_A.row(i).norm();
      if (norm <= 1e-14) {
        if (pre_b(i) < 0.0) {
          throw SynthesisError("invariant set: constraint set became empty");
        }
        continue;
      }
      const double h = omega.support(pre_A.row(i).transpose() / norm);
      if (h > pre_b(i) / norm + options.tolerance) {
        fresh.push_back(i);
      }
    }
    if (fresh.empty()) {
      return {omega, it};
    }
    const Polytope pre(select_rows(pre_A, fresh), select_entries(pre_b, fresh));
    omega = omega.intersect(pre).without_redundant_rows(options.tolerance);
  }
  std::ostringstream os;
  os << "invariant set: no convergence within " << options.max_iterations << " iterations";
  throw SynthesisError(os.str());
}

}  // namespace

Polytope::Polytope(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  if (A.rows() != b.size()) {
    throw DomainError("Polytope: row count and offset size differ");
  }
  A_ = A;
  b_ = b;
  for (Eigen::Index i = 0; i < A_.rows(); ++i) {
    const double norm = A_.row(i).norm();
    if (!std::isfinite(norm) || norm == 0.0 || std::isnan(b_(i))) {
      throw DomainError("Polytope: rows must be finite and nonzero");
    }
    A_.row(i) /= norm;
    b_(i) /= norm;
  }
}

Polytope Polytope::universe(Eigen::Index dim) {
  return Polytope(Eigen::MatrixXd(0, dim), Eigen::VectorXd(0));
}

Polytope Polytope::box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  const Eigen::Index n = lo.size();
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> offsets;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isfinite(hi(i))) {
      rows.push_back(Eigen::VectorXd::Unit(n, i));
      offsets.push_back(hi(i));
    }
    if (std::isfinite(lo(i))) {
      rows.push_back(-Eigen::VectorXd::Unit(n, i));
      offsets.push_back(-lo(i));
    }
  }
  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), n);
  Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    A.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    b(static_cast<Eigen::Index>(i)) = offsets[i];
  }
  return Polytope(A, b);
}

bool Polytope::contains(const Eigen::VectorXd& x, double tol) const {
  if (rows() == 0) {
    return true;
  }
  return ((A_ * x - b_).array() <= tol).all();
}

double Polytope::support(const Eigen::VectorXd& direction) const {
  if (rows() == 0) {
    return direction.isZero(0.0) ? 0.0 : kInf;
  }
  return maximize_linear(A_, b_, direction).value;
}

bool Polytope::is_empty() const {
  if (rows() == 0) {
    return false;
  }
  if (b_.minCoeff() >= 0.0) {
    return false;
  }
  return maximize_linear(A_, b_, Eigen::VectorXd::Zero(dim())).status == LpStatus::kInfeasible;
}

Polytope Polytope::intersect(const Polytope& other) const {
  if (other.dim() != dim() && other.rows() > 0 && rows() > 0) {
    throw DomainError("Polytope::intersect: dimension mismatch");
  }
  if (rows() == 0) {
    return other;
  }
  if (other.rows() == 0) {
    return *this;
  }
  Eigen::MatrixXd A(rows() + other.rows(), dim());
  Eigen::VectorXd b(rows() + other.rows());
  A << A_, other.A_;
  b << b_, other.b_;
  return Polytope(A, b);
}

Polytope Polytope::scaled(double s) const {
  Polytope out = *this;
  out.b_ *= s;
  return out;
}

Polytope Polytope::without_redundant_rows(double tol) const {
  if (rows() <= 1 || is_empty()) {
    return *this;
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < rows(); ++i) {
    keep.push_back(i);
  }
  size_t k = 0;
  while (k < keep.size()) {
    std::vector<Eigen::Index> others;
    others.reserve(keep.size() - 1);
    for (size_t j = 0; j < keep.size(); ++j) {
      if (j != k) {
        others.push_back(keep[j]);
      }
    }
    const Eigen::Index i = keep[k];
    const LpResult lp = maximize_linear(select_rows(A_, others), select_entries(b_, others),
                                        A_.row(i).transpose());
    if (lp.status == LpStatus::kOptimal && lp.value <= b_(i) + tol) {
      keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
      ++k;
    }
  }
  Polytope out;
  out.A_ = select_rows(A_, keep);
  out.b_ = select_entries(b_, keep);
  return out;
}

Ellipsoid::Ellipsoid(SymmetricMatrix shape, double level_) : P(std::move(shape)), level(level_) {
  if (!(level >= 0.0) || !std::isfinite(level)) {
    throw DomainError("Ellipsoid: level must be finite and non-negative");
  }
  llt_.compute(P.matrix());
  if (llt_.info() != Eigen::Success) {
    throw DomainError("Ellipsoid: shape matrix must be positive definite");
  }
}

double Ellipsoid::support(const Eigen::VectorXd& direction) const {
  if (level == 0.0) {
    return 0.0;
  }
  return std::sqrt(level * direction.dot(llt_.solve(direction)));
}

bool Ellipsoid::contains(const Eigen::VectorXd& x, double tol) const {
  return P.quadratic_form(x) <= level + tol;
}

TightenedPolytope pontryagin_diff_ellipsoid(const Polytope& X, const Ellipsoid& E) {
  Eigen::VectorXd b = X.b();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    b(i) -= E.support(X.A().row(i).transpose());
  }
  TightenedPolytope out{Polytope(X.A(), b), false};
  out.empty = out.set.is_empty();
  return out;
}

TightenedInterval pontryagin_diff_interval(const Interval& U, const Eigen::RowVectorXd& K,
                                           const Ellipsoid& E) {
  const double shrink = E.support(K.transpose());
  TightenedInterval out{{U.lo + shrink, U.hi - shrink}, false};
  out.empty = out.set.empty();
  return out;
}

InvariantSetResult max_positively_invariant(const Eigen::MatrixXd& A_cl, const Polytope& X,
                                            const Interval& U, const Eigen::RowVectorXd& K,
                                            const InvariantSetOptions& options) {
  return preset_iteration(A_cl, X, U, K, nullptr, options);
}

InvariantSetResult max_robust_positively_invariant(const Eigen::MatrixXd& A_cl, const Polytope& X,
                                                   const Interval& U, const Eigen::RowVectorXd& K,
                                                   const Zonotope& W,
                                                   const InvariantSetOptions& options) {
  InvariantSetResult out = preset_iteration(A_cl, X, U, K, &W, options);
  if (out.set.is_empty()) {
    throw SynthesisError("robust invariant set is empty; disturbance too large for the constraints");
  }
  return out;
}

double max_ellipsoid_level_in_polytope(const SymmetricMatrix& P, const Polytope& X) {
  if (X.rows() == 0) {
    return kInf;
  }
  if (!(X.b().minCoeff() > 0.0)) {
    throw DomainError("max_ellipsoid_level_in_polytope: origin must be strictly inside the polytope");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(P.matrix());
  if (llt.info() != Eigen::Success) {
    throw DomainError("max_ellipsoid_level_in_polytope: P must be positive definite");
  }
  double alpha = kInf;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd a = X.A().row(i).transpose();
    const double q = a.dot(llt.solve(a));
    alpha = std::min(alpha, X.b()(i) * X.b()(i) / q);
  }
  return alpha;
}

}  // namespace twip
