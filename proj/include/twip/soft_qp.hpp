#pragma once

#include <Eigen/Dense>

#include "twip/qp.hpp"

namespace twip {

/// QP with quadratically penalized per-row slacks:
///
///   min 1/2 z'Hz + f'z + weight * sum(eps_i^2)
///   s.t. A_hard z <= b_hard,  A_soft z <= b_soft + eps,  eps >= 0.
///
/// At the optimum eps = max(0, A_soft z - b_soft), so the slacks can be
/// eliminated and the problem is a strictly convex piecewise quadratic in z.
struct SoftQpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd A_hard;
  Eigen::VectorXd b_hard;
  Eigen::MatrixXd A_soft;
  Eigen::VectorXd b_soft;
  double weight = 1.0;

  /// The same problem with the slacks as explicit decision variables
  /// appended after z.
  QpProblem with_explicit_slacks() const;
};

struct SoftQpSolution {
  QpSolution qp;          ///< primal is z only; dual_in refers to hard rows
  Eigen::VectorXd slack;  ///< max(0, A_soft z - b_soft)

  /// Primal and dual point of with_explicit_slacks().
  QpSolution expanded(const SoftQpProblem& problem) const;
};

/// Finite Newton method with exact line search. Each iteration fixes the set
/// of violated soft rows, solves the resulting QP over the hard rows with
/// DenseQpSolver and moves along the step to the minimum of the true
/// piecewise-quadratic objective.
class SoftQpSolver {
 public:
  SoftQpSolver(Eigen::MatrixXd H, Eigen::MatrixXd A_hard, Eigen::MatrixXd A_soft, double weight,
               int max_iterations = 100);

  SoftQpSolution solve(const Eigen::VectorXd& f, const Eigen::VectorXd& b_hard,
                       const Eigen::VectorXd& b_soft,
                       const Eigen::VectorXd* warm_start = nullptr) const;

  double objective(const Eigen::VectorXd& z, const Eigen::VectorXd& f,
                   const Eigen::VectorXd& b_soft) const;

 private:
  Eigen::MatrixXd H_;
  Eigen::MatrixXd A_hard_;
  Eigen::MatrixXd A_soft_;
  double weight_;
  int max_iterations_;
};

SoftQpSolution solve_soft_qp(const SoftQpProblem& problem,
                             const Eigen::VectorXd* warm_start = nullptr);

}  // namespace twip
