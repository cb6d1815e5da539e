#pragma once

#include <Eigen/Dense>

namespace twip {

enum class LpStatus {
  kOptimal,
  kUnbounded,   ///< objective is +infinity over a nonempty set
  kInfeasible,  ///< the constraint set is empty
};

struct LpResult {
  LpStatus status = LpStatus::kOptimal;
  double value = 0.0;  ///< +inf when unbounded, -inf when infeasible
  int pivots = 0;
};

/// max c'x subject to A x <= b with x free.
///
/// Solved as the dual standard-form problem min b'y, A'y = c, y >= 0 with a
/// two-phase tableau simplex. The tableau has dim(x) rows, so the cost per
/// pivot is linear in the number of halfspaces.
LpResult maximize_linear(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c);

}  // namespace twip
