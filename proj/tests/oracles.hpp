#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "twip/geometry.hpp"
#include "twip/qp.hpp"

namespace twip::oracle {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd M(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      M(i, j) = n(rng);
    }
  }
  return M;
}

/// Riccati value iteration from P = Q in the stabilized (Joseph) form
/// P <- Q + K'RK + (A - BK)'P(A - BK), symmetrized every step.
inline Eigen::MatrixXd riccati_iteration(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                         const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  Eigen::MatrixXd P = Q;
  double last = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 200000; ++k) {
    const Eigen::MatrixXd K = (R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
    const Eigen::MatrixXd Acl = A - B * K;
    Eigen::MatrixXd Pn = Q + K.transpose() * R * K + Acl.transpose() * P * Acl;
    Pn = 0.5 * (Pn + Pn.transpose()).eval();
    const double change = (Pn - P).norm();
    P = Pn;
    // Stop at round-off level, or once the update no longer shrinks there.
    if (change <= 1e-15 * P.norm() || (change <= 1e-12 * P.norm() && change >= last)) {
      break;
    }
    last = change;
  }
  return P;
}

/// sum_k (A')^k Q A^k, stopped once a term drops below 1e-14 of the sum.
inline Eigen::MatrixXd lyapunov_series(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(Q.rows(), Q.cols());
  Eigen::MatrixXd Ak = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  for (int k = 0; k < 1000000; ++k) {
    const Eigen::MatrixXd term = Ak.transpose() * Q * Ak;
    sum += term;
    if (term.norm() <= 1e-14 * sum.norm()) {
      break;
    }
    Ak = A * Ak;
  }
  return sum;
}

/// Direct solve of the KKT system of an equality-constrained QP.
inline Eigen::VectorXd equality_qp_kkt(const QpProblem& p) {
  const Eigen::Index n = p.H.rows();
  const Eigen::Index m = p.A_eq.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = p.H;
  K.topRightCorner(n, m) = p.A_eq.transpose();
  K.bottomLeftCorner(m, n) = p.A_eq;
  Eigen::VectorXd rhs(n + m);
  rhs << -p.f, p.b_eq;
  return K.fullPivLu().solve(rhs).head(n);
}

struct PontryaginInstanceResult {
  int points = 0;
  int disagreements = 0;
};

/// Random 2D polytope minus a random ellipsoid; membership of sampled points
/// in the computed difference is compared with the sampled-support rule
/// "x is inside iff A(x + e) <= b for 10^3 boundary points e".
inline PontryaginInstanceResult pontryagin_instance(std::mt19937_64& rng, int points = 10000,
                                                    double tol = 1e-6) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int rows = 5 + static_cast<int>(u(rng) * 6);
  Eigen::MatrixXd A(rows, 2);
  Eigen::VectorXd b(rows);
  for (int i = 0; i < rows; ++i) {
    const double t = 2.0 * std::numbers::pi * (i + 0.5 * u(rng)) / rows;
    A.row(i) << std::cos(t), std::sin(t);
    b(i) = 0.6 + 0.8 * u(rng);
  }
  const Polytope X(A, b);
  Eigen::Matrix2d G;
  G << n(rng), n(rng), n(rng), n(rng);
  Eigen::Matrix2d P = G * G.transpose() + 0.3 * Eigen::Matrix2d::Identity();
  // Scale so the largest support value stays near 0.15.
  const double max_axis = 1.0 / std::sqrt(P.eigenvalues().real().minCoeff());
  const double level = std::pow(0.15 / max_axis, 2);
  const Ellipsoid E{SymmetricMatrix(P), level};
  const TightenedPolytope D = pontryagin_diff_ellipsoid(X, E);

  Eigen::Matrix<double, 2, 1000> boundary;
  const Eigen::LLT<Eigen::Matrix2d> llt(P);
  for (int k = 0; k < 1000; ++k) {
    const double t = 2.0 * std::numbers::pi * k / 1000.0;
    const Eigen::Vector2d y(std::cos(t), std::sin(t));
    boundary.col(k) = std::sqrt(level) * llt.matrixU().solve(y);
  }
  // max_k max_i a_i'(x + e_k) - b_i splits into a per-row sampled support.
  const Eigen::VectorXd sampled_support = (X.A() * boundary).rowwise().maxCoeff();
  PontryaginInstanceResult res;
  std::uniform_real_distribution<double> box(-1.5, 1.5);
  for (int s = 0; s < points; ++s) {
    const Eigen::Vector2d x(box(rng), box(rng));
    const bool lib_in = !D.empty && D.set.contains(x);
    const double worst = (X.A() * x - X.b() + sampled_support).maxCoeff();
    ++res.points;
    if ((lib_in && worst > tol) || (!lib_in && worst < -tol)) {
      ++res.disagreements;
    }
  }
  return res;
}

}  // namespace twip::oracle
