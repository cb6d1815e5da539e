#include "twip/linprog.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "twip/errors.hpp"

namespace twip {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kBlandAfter = 64;
constexpr int kMaxPivots = 20000;

class Tableau {
 public:
  // rows = number of equality constraints, cols = structural + artificial.
  Tableau(Eigen::Index rows, Eigen::Index cols)
      : T_(Eigen::MatrixXd::Zero(rows, cols + 1)), obj_(Eigen::RowVectorXd::Zero(cols + 1)),
        basis_(static_cast<size_t>(rows), -1) {}

  Eigen::MatrixXd& T() { return T_; }
  Eigen::RowVectorXd& obj() { return obj_; }
  std::vector<Eigen::Index>& basis() { return basis_; }
  Eigen::Index rhs_col() const { return T_.cols() - 1; }

  void pivot(Eigen::Index row, Eigen::Index col) {
    T_.row(row) /= T_(row, col);
    for (Eigen::Index i = 0; i < T_.rows(); ++i) {
      if (i != row && T_(i, col) != 0.0) {
        T_.row(i) -= T_(i, col) * T_.row(row);
      }
    }
    if (obj_(col) != 0.0) {
      obj_ -= obj_(col) * T_.row(row);
    }
    basis_[static_cast<size_t>(row)] = col;
    ++pivots_;
  }

  // Minimizes the objective row over columns [0, allowed). Returns false when
  // unbounded.
  bool optimize(Eigen::Index allowed, double tol) {
    int local = 0;
    while (true) {
      if (pivots_ > kMaxPivots) {
        throw SynthesisError("maximize_linear: pivot limit exceeded");
      }
      Eigen::Index enter = -1;
      if (local < kBlandAfter) {
        double best = -tol;
        for (Eigen::Index j = 0; j < allowed; ++j) {
          if (obj_(j) < best) {
            best = obj_(j);
            enter = j;
          }
        }
      } else {
        for (Eigen::Index j = 0; j < allowed; ++j) {
          if (obj_(j) < -tol) {
            enter = j;
            break;
          }
        }
      }
      if (enter < 0) {
        return true;
      }
      Eigen::Index leave = -1;
      double best_ratio = kInf;
      for (Eigen::Index i = 0; i < T_.rows(); ++i) {
        const double a = T_(i, enter);
        if (a > tol) {
          const double ratio = T_(i, rhs_col()) / a;
          if (ratio < best_ratio - 1e-14 ||
              (std::abs(ratio - best_ratio) <= 1e-14 && leave >= 0 &&
               basis_[static_cast<size_t>(i)] < basis_[static_cast<size_t>(leave)])) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) {
        return false;
      }
      pivot(leave, enter);
      ++local;
    }
  }

  int pivots() const { return pivots_; }

 private:
  Eigen::MatrixXd T_;
  Eigen::RowVectorXd obj_;
  std::vector<Eigen::Index> basis_;
  int pivots_ = 0;
};

}  // namespace

LpResult maximize_linear(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (b.size() != m || c.size() != n) {
    throw DomainError("maximize_linear: dimension mismatch");
  }
  LpResult result;
  if (m == 0) {
    result.status = c.isZero(0.0) ? LpStatus::kOptimal : LpStatus::kUnbounded;
    result.value = c.isZero(0.0) ? 0.0 : kInf;
    return result;
  }

  const double scale = std::max({1.0, A.cwiseAbs().maxCoeff(), c.cwiseAbs().maxCoeff()});
  const double tol = 1e-11 * scale;

  // Dual: min b'y s.t. A'y = c, y >= 0. Columns: y (m), artificials (n), rhs.
  Tableau tab(n, m + n);
  Eigen::MatrixXd& T = tab.T();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double sign = c(j) < 0.0 ? -1.0 : 1.0;
    T.row(j).head(m) = sign * A.col(j).transpose();
    T(j, m + j) = 1.0;
    T(j, tab.rhs_col()) = sign * c(j);
    tab.basis()[static_cast<size_t>(j)] = m + j;
  }

  // Phase 1: minimize the sum of artificials.
  Eigen::RowVectorXd& obj = tab.obj();
  obj.setZero();
  for (Eigen::Index j = 0; j < n; ++j) {
    obj.head(m) -= T.row(j).head(m);
    obj(tab.rhs_col()) -= T(j, tab.rhs_col());
  }
  tab.optimize(m, tol);
  const double infeasibility = -obj(tab.rhs_col());
  if (infeasibility > 1e-9 * scale) {
    // The dual is infeasible: c is not in the cone of the row normals, so the
    // (nonempty) primal set is unbounded in direction c. An empty primal set
    // with an infeasible dual is reported the same way; callers that need to
    // tell them apart check emptiness with c = 0 first.
    result.status = LpStatus::kUnbounded;
    result.value = kInf;
    result.pivots = tab.pivots();
    return result;
  }

  // Drive remaining artificials out of the basis where possible.
  for (Eigen::Index i = 0; i < n; ++i) {
    if (tab.basis()[static_cast<size_t>(i)] < m) {
      continue;
    }
    Eigen::Index col = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (std::abs(T(i, j)) > best) {
        best = std::abs(T(i, j));
        col = j;
      }
    }
    if (col >= 0) {
      tab.pivot(i, col);
    }
  }

  // Phase 2: minimize b'y; artificials may not re-enter.
  obj.setZero();
  obj.head(m) = b.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index bi = tab.basis()[static_cast<size_t>(i)];
    if (bi < m && obj(bi) != 0.0) {
      obj -= obj(bi) * T.row(i);
    }
  }
  const bool bounded = tab.optimize(m, 1e-11 * std::max(1.0, b.cwiseAbs().maxCoeff()));
  result.pivots = tab.pivots();
  if (!bounded) {
    result.status = LpStatus::kInfeasible;
    result.value = -kInf;
    return result;
  }
  result.status = LpStatus::kOptimal;
  result.value = -obj(tab.rhs_col());
  return result;
}

}  // namespace twip
