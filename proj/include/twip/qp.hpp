#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace twip {

/// min 1/2 z'Hz + f'z  s.t.  A_eq z = b_eq,  A_in z <= b_in.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
};

enum class QpStatus {
  kOptimal,
  kInfeasible,
  kMaxIterations,
};

const char* to_string(QpStatus status);

/// Multipliers follow H z + f + A_eq' dual_eq + A_in' dual_in = 0, dual_in >= 0.
struct QpSolution {
  Eigen::VectorXd primal;
  Eigen::VectorXd dual_eq;
  Eigen::VectorXd dual_in;
  double objective = 0.0;
  QpStatus status = QpStatus::kOptimal;
  int iterations = 0;
  std::vector<int> active_set;  ///< indices into the inequality rows
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal_feasibility = 0.0;
  double dual_feasibility = 0.0;
  double complementarity = 0.0;

  double max() const;
};

KktResiduals kkt_residuals(const QpProblem& problem, const QpSolution& solution);

struct QpSettings {
  int max_iterations = 0;          ///< 0 selects 10 (n + m) + 50
  double feasibility_tol = 1e-10;  ///< relative to 1 + |b_i|
};

/// Goldfarb-Idnani dual active-set method for strictly convex QPs. The
/// Cholesky factor of H is computed once and reused by every solve(), which
/// is how the receding-horizon controllers call it.
class DenseQpSolver {
 public:
  explicit DenseQpSolver(const Eigen::MatrixXd& H, QpSettings settings = {});

  Eigen::Index size() const { return H_.rows(); }
  const Eigen::MatrixXd& hessian() const { return H_; }

  /// `warm_primal`, when given, selects the inequality rows active at that
  /// point; the dual method adds violated rows from that set first.
  QpSolution solve(const Eigen::VectorXd& f, const Eigen::MatrixXd& A_eq,
                   const Eigen::VectorXd& b_eq, const Eigen::MatrixXd& A_in,
                   const Eigen::VectorXd& b_in, const Eigen::VectorXd* warm_primal = nullptr) const;

 private:
  Eigen::MatrixXd H_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::MatrixXd J0_;  // L^-T
  QpSettings settings_;
};

/// Throws DomainError when H is not positive definite or sizes disagree.
QpSolution solve_qp(const QpProblem& problem, const std::optional<Eigen::VectorXd>& warm_start = {});

}  // namespace twip
