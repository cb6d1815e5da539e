#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "twip/control_math.hpp"
#include "twip/errors.hpp"

using namespace twip;
using Eigen::MatrixXd;

namespace {

MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }

using oracle::random_matrix;
using oracle::riccati_iteration;

}  // namespace

TEST_SUITE("control_math") {

TEST_CASE("scalar DARE has the golden-ratio solution") {
  const DareSolution s = solve_dare(scalar(1), scalar(1), scalar(1), scalar(1));
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  CHECK(std::abs(s.P(0, 0) - phi) < 1e-12);
  CHECK(std::abs(s.K(0, 0) - (phi - 1.0)) < 1e-12);
}

TEST_CASE("DARE with A = 0 is one-step deadbeat") {
  const MatrixXd Q = MatrixXd::Identity(3, 3) * 2.0;
  const DareSolution s = solve_dare(MatrixXd::Zero(3, 3), MatrixXd::Ones(3, 1), Q, scalar(1));
  CHECK((s.P.matrix() - Q).norm() < 1e-14);
  CHECK(s.K.norm() < 1e-14);
}

TEST_CASE("DARE agrees with the Riccati iteration oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 3;
    const int m = 1 + trial % 2;
    const MatrixXd A = random_matrix(rng, n, n) * 0.6;
    const MatrixXd B = random_matrix(rng, n, m);
    const MatrixXd G = random_matrix(rng, n, n);
    const MatrixXd Q = G * G.transpose() + 0.1 * MatrixXd::Identity(n, n);
    const MatrixXd R = MatrixXd::Identity(m, m) * (0.5 + trial * 0.1);
    const DareSolution s = solve_dare(A, B, Q, R);
    const MatrixXd P_it = riccati_iteration(A, B, Q, R);
    CHECK((s.P.matrix() - P_it).norm() <= 1e-8 * P_it.norm());
    CHECK(dare_residual(A, B, Q, R, s.P.matrix()) <= 1e-9);
    CHECK(spectral_radius(A - B * s.K) < 1.0);
  }
}

TEST_CASE("TWIP LQR: residual and strict Lyapunov decrease") {
  const LinearDiscreteModel& m = twip::test::twip_model();
  const Matrix4 Q = twip::test::lqr_weights();
  const DareSolution s = solve_dare(m.A, m.B, Q, scalar(40.0));
  CHECK(dare_residual(m.A, m.B, Q, scalar(40.0), s.P.matrix()) <= 1e-9);
  const MatrixXd Acl = m.A - m.B * s.K;
  const MatrixXd D = Acl.transpose() * s.P.matrix() * Acl - s.P.matrix();
  CHECK(lambda_max(SymmetricMatrix(0.5 * (D + D.transpose()))) < -1e-10 * s.P.matrix().norm());
  CHECK((s.P.matrix() - riccati_iteration(m.A, m.B, Q, scalar(40.0))).norm() <= 1e-8 * s.P.matrix().norm());
}

TEST_CASE("non-stabilizable pair is a synthesis error") {
  MatrixXd A(2, 2);
  A << 2.0, 0.0, 0.0, 0.5;
  MatrixXd B(2, 1);
  B << 0.0, 1.0;
  CHECK_THROWS_AS(solve_dare(A, B, MatrixXd::Identity(2, 2), scalar(1)), SynthesisError);
}

TEST_CASE("discrete Lyapunov closed forms") {
  const SymmetricMatrix p = solve_discrete_lyapunov(scalar(0.5), scalar(1.0));
  CHECK(std::abs(p(0, 0) - 4.0 / 3.0) < 1e-14);
  const MatrixXd Q = (MatrixXd(2, 2) << 2, 1, 1, 3).finished();
  CHECK((solve_discrete_lyapunov(MatrixXd::Zero(2, 2), Q).matrix() - Q).norm() < 1e-14);
}

TEST_CASE("discrete Lyapunov matches the series oracle") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    MatrixXd A = random_matrix(rng, 2, 2);
    A *= 0.9 / std::max(spectral_radius(A), 1e-3);
    const MatrixXd G = random_matrix(rng, 2, 2);
    const MatrixXd Q = G * G.transpose() + 0.5 * MatrixXd::Identity(2, 2);
    const MatrixXd sum = oracle::lyapunov_series(A, Q);
    const SymmetricMatrix P = solve_discrete_lyapunov(A, Q);
    CHECK((P.matrix() - sum).norm() <= 1e-10 * sum.norm());
    const MatrixXd res = A.transpose() * P.matrix() * A - P.matrix() + Q;
    CHECK(res.norm() <= 1e-10 * P.matrix().norm());
    CHECK(lambda_min(P) > 0.0);
  }
}

TEST_CASE("Lyapunov on an unstable matrix names the eigenvalue") {
  MatrixXd A(2, 2);
  A << 1.25, 0.0, 0.0, 0.1;
  try {
    solve_discrete_lyapunov(A, MatrixXd::Identity(2, 2));
    FAIL("expected SynthesisError");
  } catch (const SynthesisError& e) {
    CHECK(std::string(e.what()).find("1.25") != std::string::npos);
  }
}

TEST_CASE("spectral norm and symmetric eigendecomposition") {
  CHECK(spectral_norm(MatrixXd::Identity(4, 4)) == doctest::Approx(1.0).epsilon(1e-15));
  const SymmetricMatrix D(Eigen::Vector3d(3, 1, 2).asDiagonal().toDenseMatrix());
  const SymmetricEigen e = eig_sym(D);
  CHECK(e.values(0) == doctest::Approx(1.0));
  CHECK(e.values(1) == doctest::Approx(2.0));
  CHECK(e.values(2) == doctest::Approx(3.0));
  CHECK(spectral_norm(D.matrix()) == doctest::Approx(3.0).epsilon(1e-14));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd G = random_matrix(rng, 4, 4);
    const SymmetricMatrix S(G + G.transpose());
    const SymmetricEigen ev = eig_sym(S);
    CHECK(std::abs(ev.values.sum() - S.matrix().trace()) <= 1e-12 * (1.0 + S.matrix().norm()));
    const MatrixXd rec = ev.vectors * ev.values.asDiagonal() * ev.vectors.transpose();
    CHECK((rec - S.matrix()).norm() <= 1e-9 * S.matrix().norm());
    for (int i = 0; i < 4; ++i) {
      const Eigen::VectorXd v = ev.vectors.col(i);
      CHECK((S.matrix() * v - ev.values(i) * v).norm() <= 1e-10 * S.matrix().norm());
    }
    for (int i = 0; i + 1 < 4; ++i) {
      CHECK(ev.values(i) <= ev.values(i + 1));
    }
    Eigen::JacobiSVD<MatrixXd> svd(G);
    CHECK(std::abs(spectral_norm(G) - svd.singularValues()(0)) <= 1e-10 * svd.singularValues()(0));
  }
}

TEST_CASE("SymmetricMatrix rejects asymmetric input") {
  MatrixXd M(2, 2);
  M << 1.0, 2.0, 2.0 + 1e-6, 1.0;
  CHECK_THROWS_AS(SymmetricMatrix{M}, DomainError);
  M(1, 0) = 2.0 + 1e-15;
  const SymmetricMatrix S(M);
  CHECK(S(0, 1) == S(1, 0));
  CHECK_THROWS_AS(SymmetricMatrix{MatrixXd::Zero(2, 3)}, DomainError);
}

}  // TEST_SUITE
