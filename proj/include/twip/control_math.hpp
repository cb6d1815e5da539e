#pragma once

#include <Eigen/Dense>

namespace twip {

/// Dense symmetric matrix. Construction checks that the input is symmetric up
/// to 1e-12 relative to its largest entry and then symmetrizes it exactly.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(const Eigen::MatrixXd& M);

  const Eigen::MatrixXd& matrix() const { return m_; }
  Eigen::Index size() const { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  /// x' M x
  double quadratic_form(const Eigen::VectorXd& x) const { return x.dot(m_ * x); }

 private:
  Eigen::MatrixXd m_;
};

struct DareSolution {
  SymmetricMatrix P;
  Eigen::MatrixXd K;  ///< u = -K x
  int iterations = 0;
};

/// Stabilizing solution of P = Q + A'PA - A'PB (R + B'PB)^-1 B'PA via the
/// structured doubling algorithm, with K = (R + B'PB)^-1 B'PA.
/// Throws SynthesisError when (A, B) is not stabilizable.
DareSolution solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

/// Relative Frobenius residual of the DARE at P.
double dare_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                     const Eigen::MatrixXd& R, const Eigen::MatrixXd& P);

/// Solves A' P A - P = -Q for Schur-stable A. Throws SynthesisError otherwise.
SymmetricMatrix solve_discrete_lyapunov(const Eigen::MatrixXd& A_cl, const Eigen::MatrixXd& Q);

/// Largest singular value.
double spectral_norm(const Eigen::MatrixXd& M);

double spectral_radius(const Eigen::MatrixXd& M);

struct SymmetricEigen {
  Eigen::VectorXd values;   ///< ascending
  Eigen::MatrixXd vectors;  ///< orthonormal columns
};

SymmetricEigen eig_sym(const SymmetricMatrix& S);

double lambda_min(const SymmetricMatrix& S);
double lambda_max(const SymmetricMatrix& S);

}  // namespace twip
