#include "twip/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "twip/errors.hpp"

namespace twip {

const char* to_string(PolicyStatus status) {
  switch (status) {
    case PolicyStatus::kOk:
      return "ok";
    case PolicyStatus::kInfeasible:
      return "infeasible";
    case PolicyStatus::kDivergedGuard:
      return "diverged";
  }
  return "unknown";
}

LqrDesign synthesize_lqr(const LinearDiscreteModel& model, const Matrix4& Q, double R) {
  if (!(R > 0.0) || !std::isfinite(R)) {
    throw DomainError("synthesize_lqr: R must be positive");
  }
  const Eigen::MatrixXd Rm = Eigen::MatrixXd::Constant(1, 1, R);
  const DareSolution dare = solve_dare(model.A, model.B, Q, Rm);
  LqrDesign out;
  out.K = dare.K.row(0);
  out.P = dare.P;
  out.A_cl = model.A - model.B * out.K;
  return out;
}

LqrPolicy::LqrPolicy(Eigen::RowVector4d K, double u_max) : K_(std::move(K)), u_max_(u_max) {
  if (!(u_max_ > 0.0) || !K_.allFinite()) {
    throw DomainError("LqrPolicy: u_max must be positive and K finite");
  }
}

PolicyOutput LqrPolicy::compute(const State& x) {
  if (is_diverged(x)) {
    return {0.0, PolicyStatus::kDivergedGuard};
  }
  return {std::clamp(-K_.dot(x), -u_max_, u_max_), PolicyStatus::kOk};
}

std::unique_ptr<ControllerPolicy> LqrPolicy::clone() const {
  return std::make_unique<LqrPolicy>(*this);
}

Polytope state_constraint_box(double max_velocity, double max_pitch, double max_pitch_rate) {
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::Vector4d hi(inf, max_velocity, max_pitch, max_pitch_rate);
  if (!(hi.tail<3>().array() > 0.0).all()) {
    throw DomainError("state_constraint_box: bounds must be positive");
  }
  return Polytope::box(-hi, hi);
}

Prediction::Prediction(const LinearDiscreteModel& model, int horizon) {
  if (horizon < 1) {
    throw DomainError("Prediction: horizon must be at least 1");
  }
  const Eigen::Index N = horizon;
  Phi = Eigen::MatrixXd::Zero(4 * N, 4);
  Gamma = Eigen::MatrixXd::Zero(4 * N, N);
  Matrix4 Ak = model.A;
  for (Eigen::Index k = 0; k < N; ++k) {
    Phi.block<4, 4>(4 * k, 0) = Ak;
    Ak = model.A * Ak;
  }
  // Block (k, j) = A^(k-j) B for j <= k, with row block k holding x_{k+1}.
  Eigen::Matrix<double, 4, Eigen::Dynamic> AB(4, N);
  Eigen::Vector4d v = model.B;
  for (Eigen::Index p = 0; p < N; ++p) {
    AB.col(p) = v;
    v = model.A * v;
  }
  for (Eigen::Index k = 0; k < N; ++k) {
    for (Eigen::Index j = 0; j <= k; ++j) {
      Gamma.block<4, 1>(4 * k, j) = AB.col(k - j);
    }
  }
}

Eigen::Matrix<double, 4, Eigen::Dynamic> Prediction::states(const State& x0,
                                                            const Eigen::VectorXd& U) const {
  const Eigen::VectorXd stacked = Phi * x0 + Gamma * U.head(Gamma.cols());
  return Eigen::Map<const Eigen::Matrix<double, 4, Eigen::Dynamic>>(stacked.data(), 4,
                                                                    Gamma.cols());
}

namespace {

struct CondensedCost {
  Eigen::MatrixXd H;
  Eigen::MatrixXd F;
};

// 1/2 U'HU + (F x0)'U equals the finite-horizon cost up to a constant.
CondensedCost condensed_cost(const Prediction& pred, const Matrix4& Q, double R,
                             const Eigen::Matrix4d& Q_N) {
  const Eigen::Index N = pred.horizon();
  Eigen::MatrixXd QG(4 * N, N);
  Eigen::MatrixXd QP(4 * N, 4);
  for (Eigen::Index k = 0; k < N; ++k) {
    const Eigen::Matrix4d& W = (k == N - 1) ? Q_N : Q;
    QG.middleRows(4 * k, 4) = W * pred.Gamma.middleRows(4 * k, 4);
    QP.middleRows(4 * k, 4) = W * pred.Phi.middleRows(4 * k, 4);
  }
  CondensedCost c;
  c.H = 2.0 * (pred.Gamma.transpose() * QG);
  c.H.diagonal().array() += 2.0 * R;
  c.H = 0.5 * (c.H + c.H.transpose()).eval();
  c.F = 2.0 * (pred.Gamma.transpose() * QP);
  return c;
}

// Rows a'x_k <= b of `set` at prediction step k (1-based) written over U:
// a' Gamma_k U <= b - a' Phi_k x0.
void append_stage_rows(const Prediction& pred, int k, const Polytope& set, Eigen::MatrixXd& A,
                       Eigen::VectorXd& b0, Eigen::MatrixXd& S, Eigen::Index& row) {
  const auto G = pred.Gamma.middleRows(4 * (k - 1), 4);
  const auto P = pred.Phi.middleRows(4 * (k - 1), 4);
  for (Eigen::Index i = 0; i < set.rows(); ++i, ++row) {
    A.row(row).head(G.cols()) = set.A().row(i) * G;
    S.row(row) = set.A().row(i) * P;
    b0(row) = set.b()(i);
  }
}

}  // namespace

namespace {

struct MpcMatrices {
  CondensedCost cost;
  Eigen::MatrixXd A_hard;
  Eigen::VectorXd b_hard;
  Eigen::MatrixXd A_soft;
  Eigen::VectorXd b_soft0;
  Eigen::MatrixXd S_soft;
};

MpcMatrices build_mpc(const Prediction& pred, const LqrDesign& lqr, const PredictiveSettings& s,
                      const Polytope& terminal) {
  const int N = pred.horizon();
  MpcMatrices m;
  m.cost = condensed_cost(pred, s.Q, s.R, lqr.P.matrix());
  m.A_hard.resize(2 * N, N);
  m.A_hard << Eigen::MatrixXd::Identity(N, N), -Eigen::MatrixXd::Identity(N, N);
  m.b_hard = Eigen::VectorXd::Constant(2 * N, s.u_max);
  const Eigen::Index rows = s.X.rows() * (N - 1) + terminal.rows();
  m.A_soft = Eigen::MatrixXd::Zero(rows, N);
  m.b_soft0.resize(rows);
  m.S_soft.resize(rows, 4);
  Eigen::Index row = 0;
  for (int k = 1; k < N; ++k) {
    append_stage_rows(pred, k, s.X, m.A_soft, m.b_soft0, m.S_soft, row);
  }
  append_stage_rows(pred, N, terminal, m.A_soft, m.b_soft0, m.S_soft, row);
  return m;
}

void check_predictive_settings(const PredictiveSettings& s) {
  if (s.horizon < 1) {
    throw DomainError("predictive controller: horizon must be at least 1");
  }
  if (!(s.u_max > 0.0) || !(s.R > 0.0) || !(s.slack_weight > 0.0)) {
    throw DomainError("predictive controller: u_max, R and slack weight must be positive");
  }
  if (s.X.dim() != 4) {
    throw DomainError("predictive controller: the state set must be 4-dimensional");
  }
}

}  // namespace

MpcPolicy::MpcPolicy(const LinearDiscreteModel& model, const LqrDesign& lqr,
                     const PredictiveSettings& settings, Polytope terminal_set)
    : model_(model), lqr_(lqr), settings_(settings), terminal_(std::move(terminal_set)),
      pred_(model, settings.horizon),
      solver_(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd(), Eigen::MatrixXd(), 1.0) {
  check_predictive_settings(settings_);
  if (terminal_.dim() != 4) {
    throw DomainError("MpcPolicy: the terminal set must be 4-dimensional");
  }
  MpcMatrices m = build_mpc(pred_, lqr_, settings_, terminal_);
  H_ = std::move(m.cost.H);
  F_ = std::move(m.cost.F);
  A_hard_ = std::move(m.A_hard);
  b_hard_ = std::move(m.b_hard);
  A_soft_ = std::move(m.A_soft);
  b_soft0_ = std::move(m.b_soft0);
  S_soft_ = std::move(m.S_soft);
  solver_ = SoftQpSolver(H_, A_hard_, A_soft_, settings_.slack_weight);
  plan_ = Eigen::VectorXd::Zero(settings_.horizon);
}

MpcPolicy MpcPolicy::synthesize(const LinearDiscreteModel& model, const LqrDesign& lqr,
                                const PredictiveSettings& settings) {
  check_predictive_settings(settings);
  InvariantSetResult mpi = max_positively_invariant(
      lqr.A_cl, settings.X, Interval::symmetric(settings.u_max), lqr.K);
  return MpcPolicy(model, lqr, settings, std::move(mpi.set));
}

SoftQpProblem MpcPolicy::problem(const State& x) const {
  SoftQpProblem p;
  p.H = H_;
  p.f = F_ * x;
  p.A_hard = A_hard_;
  p.b_hard = b_hard_;
  p.A_soft = A_soft_;
  p.b_soft = b_soft0_ - S_soft_ * x;
  p.weight = settings_.slack_weight;
  return p;
}

Eigen::VectorXd MpcPolicy::shifted_plan(const State& x) const {
  const int N = settings_.horizon;
  Eigen::VectorXd w(N);
  w.head(N - 1) = plan_.tail(N - 1);
  w(N - 1) = 0.0;
  State xe = x;
  for (int k = 0; k < N - 1; ++k) {
    xe = model_.A * xe + model_.B * w(k);
  }
  w(N - 1) = std::clamp(-lqr_.K.dot(xe), -settings_.u_max, settings_.u_max);
  return w;
}

PolicyOutput MpcPolicy::compute(const State& x) {
  if (is_diverged(x)) {
    has_plan_ = false;
    return {0.0, PolicyStatus::kDivergedGuard};
  }
  const Eigen::VectorXd f = F_ * x;
  const Eigen::VectorXd b_soft = b_soft0_ - S_soft_ * x;
  Eigen::VectorXd warm;
  if (has_plan_) {
    warm = shifted_plan(x);
  }
  last_ = solver_.solve(f, b_hard_, b_soft, has_plan_ ? &warm : nullptr);
  if (last_.qp.status != QpStatus::kOptimal) {
    has_plan_ = false;
    return {0.0, PolicyStatus::kInfeasible};
  }
  plan_ = last_.qp.primal;
  has_plan_ = true;
  return {std::clamp(plan_(0), -settings_.u_max, settings_.u_max), PolicyStatus::kOk};
}

std::unique_ptr<ControllerPolicy> MpcPolicy::clone() const {
  auto copy = std::make_unique<MpcPolicy>(*this);
  copy->reset();
  return copy;
}

}  // namespace twip
