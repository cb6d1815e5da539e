#include "twip/control_math.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "twip/errors.hpp"

namespace twip {

SymmetricMatrix::SymmetricMatrix(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) {
    throw DomainError("SymmetricMatrix: matrix must be square");
  }
  if (!M.allFinite()) {
    throw DomainError("SymmetricMatrix: non-finite entries");
  }
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    std::ostringstream os;
    os << "SymmetricMatrix: asymmetry " << asym << " exceeds tolerance";
    throw DomainError(os.str());
  }
  m_ = 0.5 * (M + M.transpose());
}

double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) {
    return 0.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

double spectral_radius(const Eigen::MatrixXd& M) {
  if (M.size() == 0) {
    return 0.0;
  }
  return M.eigenvalues().cwiseAbs().maxCoeff();
}

SymmetricEigen eig_sym(const SymmetricMatrix& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S.matrix());
  return {es.eigenvalues(), es.eigenvectors()};
}

double lambda_min(const SymmetricMatrix& S) { return eig_sym(S).values.minCoeff(); }
double lambda_max(const SymmetricMatrix& S) { return eig_sym(S).values.maxCoeff(); }

namespace {

// PBH test: every eigenvalue with |lambda| >= 1 must be controllable.
void check_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  using CMatrix = Eigen::MatrixXcd;
  const Eigen::Index n = A.rows();
  const Eigen::VectorXcd eigs = A.eigenvalues();
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    const std::complex<double> lambda = eigs(i);
    if (std::abs(lambda) < 1.0) {
      continue;
    }
    CMatrix pbh(n, n + B.cols());
    pbh.leftCols(n) = A.cast<std::complex<double>>() - lambda * CMatrix::Identity(n, n);
    pbh.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<CMatrix> svd(pbh);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(n - 1);
    if (smin <= 1e-10 * std::max(1.0, smax)) {
      std::ostringstream os;
      os << "solve_dare: (A, B) is not stabilizable; uncontrollable eigenvalue " << lambda
         << " with |lambda| = " << std::abs(lambda);
      throw SynthesisError(os.str());
    }
  }
}

}  // namespace

double dare_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                     const Eigen::MatrixXd& R, const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd BtPA = B.transpose() * P * A;
  const Eigen::MatrixXd S = R + B.transpose() * P * B;
  const Eigen::MatrixXd rhs =
      Q + A.transpose() * P * A - BtPA.transpose() * S.ldlt().solve(BtPA);
  return (P - rhs).norm() / std::max(P.norm(), 1e-300);
}

DareSolution solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != B.cols() || R.cols() != B.cols()) {
    throw DomainError("solve_dare: dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> r_llt(R);
  if (r_llt.info() != Eigen::Success) {
    throw DomainError("solve_dare: R must be positive definite");
  }
  check_stabilizable(A, B);

  // Structured doubling: A_k -> 0, G_k -> controllability Gramian-like term,
  // H_k -> P, with quadratic convergence.
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Ak = A;
  Eigen::MatrixXd Gk = B * r_llt.solve(B.transpose());
  Eigen::MatrixXd Hk = 0.5 * (Q + Q.transpose());
  int it = 0;
  constexpr int kMaxIterations = 100;
  for (; it < kMaxIterations; ++it) {
    const Eigen::PartialPivLU<Eigen::MatrixXd> W(I + Gk * Hk);
    const Eigen::MatrixXd WA = W.solve(Ak);
    const Eigen::MatrixXd WG = W.solve(Gk);
    const Eigen::MatrixXd H_next = Hk + Ak.transpose() * Hk * WA;
    const Eigen::MatrixXd G_next = Gk + Ak * WG * Ak.transpose();
    const Eigen::MatrixXd A_next = Ak * WA;
    if (!H_next.allFinite()) {
      throw SynthesisError("solve_dare: doubling iteration diverged");
    }
    const double change = (H_next - Hk).norm();
    Hk = 0.5 * (H_next + H_next.transpose());
    Gk = 0.5 * (G_next + G_next.transpose());
    Ak = A_next;
    if (change <= 1e-15 * Hk.norm()) {
      ++it;
      break;
    }
  }

  // A couple of fixed-point (Riccati) sweeps polish the last digits.
  Eigen::MatrixXd P = Hk;
  for (int k = 0; k < 2; ++k) {
    const Eigen::MatrixXd BtPA = B.transpose() * P * A;
    const Eigen::MatrixXd S = R + B.transpose() * P * B;
    const Eigen::MatrixXd next = Q + A.transpose() * P * A - BtPA.transpose() * S.ldlt().solve(BtPA);
    P = 0.5 * (next + next.transpose());
  }

  const Eigen::MatrixXd S = R + B.transpose() * P * B;
  Eigen::MatrixXd K = S.ldlt().solve(B.transpose() * P * A);
  const double rho = spectral_radius(A - B * K);
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "solve_dare: closed loop not Schur stable (spectral radius " << rho << ")";
    throw SynthesisError(os.str());
  }
  const double residual = dare_residual(A, B, Q, R, P);
  if (!(residual <= 1e-9)) {
    std::ostringstream os;
    os << "solve_dare: residual " << residual << " above tolerance";
    throw SynthesisError(os.str());
  }
  return {SymmetricMatrix(P), K, it};
}

SymmetricMatrix solve_discrete_lyapunov(const Eigen::MatrixXd& A_cl, const Eigen::MatrixXd& Q) {
  const Eigen::Index n = A_cl.rows();
  if (A_cl.cols() != n || Q.rows() != n || Q.cols() != n) {
    throw DomainError("solve_discrete_lyapunov: dimension mismatch");
  }
  const Eigen::VectorXcd eigs = A_cl.eigenvalues();
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    if (std::abs(eigs(i)) >= 1.0) {
      std::ostringstream os;
      os << "solve_discrete_lyapunov: A_cl is not Schur stable; eigenvalue " << eigs(i)
         << " has modulus " << std::abs(eigs(i));
      throw SynthesisError(os.str());
    }
  }
  // vec(A' P A) = (A' kron A') vec(P); solve (I - A' kron A') vec(P) = vec(Q).
  const Eigen::MatrixXd At = A_cl.transpose();
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      L.block(i * n, j * n, n, n) -= At(i, j) * At;
    }
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(L);
  const Eigen::MatrixXd Qs = 0.5 * (Q + Q.transpose());
  Eigen::VectorXd vecQ = Eigen::Map<const Eigen::VectorXd>(Qs.data(), n * n);
  Eigen::VectorXd vecP = lu.solve(vecQ);
  // One step of iterative refinement.
  vecP += lu.solve(vecQ - L * vecP);
  Eigen::MatrixXd P = Eigen::Map<Eigen::MatrixXd>(vecP.data(), n, n);
  return SymmetricMatrix(0.5 * (P + P.transpose()));
}

}  // namespace twip
