#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "twip/controllers.hpp"
#include "twip/errors.hpp"

namespace twip {

double whitened_contraction(const Matrix4& A_cl, const SymmetricMatrix& P) {
  const Eigen::LLT<Eigen::MatrixXd> llt(P.matrix());
  if (llt.info() != Eigen::Success) {
    throw DomainError("whitened_contraction: P is not positive definite");
  }
  // P = L L' with L lower; L^-1 A' P A L^-T has the generalized eigenvalues.
  const Eigen::MatrixXd APA = A_cl.transpose() * P.matrix() * A_cl;
  const Eigen::MatrixXd Y = llt.matrixL().solve(APA);
  const Eigen::MatrixXd M = llt.matrixL().solve(Y.transpose());
  return lambda_max(SymmetricMatrix(0.5 * (M + M.transpose())));
}

TubeDesign synthesize_tube(const LinearDiscreteModel& model, double alpha, double w_max) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("synthesize_tube: alpha must lie in (0, 1)");
  }
  if (!(w_max >= 0.0) || !std::isfinite(w_max)) {
    throw DomainError("synthesize_tube: w_max must be finite and nonnegative");
  }
  const double s = 1.0 / std::sqrt(alpha);
  const Eigen::MatrixXd As = s * model.A;
  const Eigen::MatrixXd Bs = s * model.B;
  const DareSolution dare =
      solve_dare(As, Bs, Eigen::MatrixXd::Identity(4, 4), Eigen::MatrixXd::Identity(1, 1));

  TubeDesign tube;
  tube.alpha = alpha;
  tube.w_max = w_max;
  tube.K = -dare.K.row(0);
  const Matrix4 A_cl = model.A + model.B * tube.K;
  tube.P = solve_discrete_lyapunov(s * A_cl, Eigen::MatrixXd::Identity(4, 4));
  tube.contraction = whitened_contraction(A_cl, tube.P);
  if (!(tube.contraction <= alpha + 1e-9)) {
    std::ostringstream msg;
    msg << "synthesize_tube: contraction " << tube.contraction << " exceeds alpha " << alpha;
    throw SynthesisError(msg.str());
  }
  // Both extreme disturbances give the same value for a symmetric segment.
  tube.delta1 = w_max * std::sqrt(model.B.dot(tube.P.matrix() * model.B));
  return tube;
}

std::vector<double> tube_offsets(double alpha, double delta1, int horizon) {
  if (horizon < 0) {
    throw DomainError("tube_offsets: negative horizon");
  }
  std::vector<double> delta(static_cast<size_t>(horizon) + 1, 0.0);
  for (size_t i = 1; i < delta.size(); ++i) {
    delta[i] = alpha * delta[i - 1] + delta1;
  }
  return delta;
}

CtmpcPolicy::CtmpcPolicy(const LinearDiscreteModel& model, const LqrDesign& lqr,
                         const TubeDesign& tube, const CtmpcSettings& settings,
                         Polytope rpi_terminal_set)
    : model_(model), lqr_(lqr), tube_(tube), settings_(settings), rpi_(std::move(rpi_terminal_set)),
      pred_(model, settings.base.horizon), solver_(Eigen::MatrixXd::Identity(1, 1)) {
  const PredictiveSettings& s = settings_.base;
  if (s.horizon < 1 || !(s.u_max > 0.0) || !(s.R > 0.0) || !(s.slack_weight > 0.0) ||
      s.X.dim() != 4 || rpi_.dim() != 4) {
    throw DomainError("CtmpcPolicy: invalid settings");
  }
  const int N = s.horizon;
  delta_ = tube_offsets(tube_.alpha, tube_.delta1, N);

  const Interval U = Interval::symmetric(s.u_max);
  for (int i = 0; i <= N; ++i) {
    const Ellipsoid F(tube_.P, delta_[static_cast<size_t>(i)] * delta_[static_cast<size_t>(i)]);
    TightenedPolytope xt = pontryagin_diff_ellipsoid(s.X, F);
    TightenedInterval ut = pontryagin_diff_interval(U, tube_.K, F);
    if (xt.empty || ut.empty) {
      std::ostringstream msg;
      msg << "CtmpcPolicy: tightened constraints are empty at stage " << i;
      throw SynthesisError(msg.str());
    }
    X_bar_.push_back(std::move(xt.set));
    U_bar_.push_back(ut.set);
  }
  TightenedPolytope xf =
      pontryagin_diff_ellipsoid(rpi_, Ellipsoid(tube_.P, delta_.back() * delta_.back()));
  if (xf.empty || xf.set.is_empty()) {
    throw SynthesisError("CtmpcPolicy: tightened terminal set is empty");
  }
  Xf_bar_ = std::move(xf.set);

  // Decision vector [v_0..v_{N-1}, eps_1..eps_N].
  const Eigen::Index n = 2 * N;
  {
    Eigen::MatrixXd QG(4 * N, N);
    Eigen::MatrixXd QP(4 * N, 4);
    for (int k = 0; k < N; ++k) {
      const Eigen::Matrix4d W = (k == N - 1) ? Eigen::Matrix4d(lqr_.P.matrix()) : s.Q;
      QG.middleRows(4 * k, 4) = W * pred_.Gamma.middleRows(4 * k, 4);
      QP.middleRows(4 * k, 4) = W * pred_.Phi.middleRows(4 * k, 4);
    }
    H_ = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd Hv = 2.0 * pred_.Gamma.transpose() * QG;
    Hv.diagonal().array() += 2.0 * s.R;
    H_.topLeftCorner(N, N) = 0.5 * (Hv + Hv.transpose());
    H_.bottomRightCorner(N, N).diagonal().setConstant(2.0 * s.slack_weight);
    F_ = Eigen::MatrixXd::Zero(n, 4);
    F_.topRows(N) = 2.0 * pred_.Gamma.transpose() * QP;
  }

  Eigen::Index rows = s.X.rows() * (N - 1) + Xf_bar_.rows() + N + 2 * N;
  A_in_ = Eigen::MatrixXd::Zero(rows, n);
  b_in0_ = Eigen::VectorXd::Zero(rows);
  S_in_ = Eigen::MatrixXd::Zero(rows, 4);
  Eigen::Index row = 0;
  auto add_stage = [&](int k, const Polytope& set) {
    const auto G = pred_.Gamma.middleRows(4 * (k - 1), 4);
    const auto P = pred_.Phi.middleRows(4 * (k - 1), 4);
    for (Eigen::Index i = 0; i < set.rows(); ++i, ++row) {
      A_in_.row(row).head(N) = set.A().row(i) * G;
      A_in_(row, N + k - 1) = -1.0;
      S_in_.row(row) = set.A().row(i) * P;
      b_in0_(row) = set.b()(i);
    }
  };
  for (int k = 1; k < N; ++k) {
    add_stage(k, X_bar_[static_cast<size_t>(k)]);
  }
  add_stage(N, Xf_bar_);
  for (int k = 0; k < N; ++k, ++row) {
    A_in_(row, N + k) = -1.0;
  }
  for (int k = 0; k < N; ++k) {
    const Interval& u = U_bar_[static_cast<size_t>(k)];
    A_in_(row, k) = 1.0;
    b_in0_(row++) = u.hi;
    A_in_(row, k) = -1.0;
    b_in0_(row++) = -u.lo;
  }
  solver_ = DenseQpSolver(H_);
  plan_ = Eigen::VectorXd::Zero(n);
}

CtmpcPolicy CtmpcPolicy::synthesize(const LinearDiscreteModel& model, const LqrDesign& lqr,
                                    const CtmpcSettings& settings) {
  const TubeDesign tube = synthesize_tube(model, settings.alpha, settings.w_max);
  Zonotope W;
  W.generators = model.B * settings.w_max;
  InvariantSetResult rpi = max_robust_positively_invariant(
      lqr.A_cl, settings.base.X, Interval::symmetric(settings.base.u_max), lqr.K, W);
  return CtmpcPolicy(model, lqr, tube, settings, std::move(rpi.set));
}

QpProblem CtmpcPolicy::problem(const State& x) const {
  QpProblem p;
  p.H = H_;
  p.f = F_ * x;
  p.A_eq = Eigen::MatrixXd(0, H_.rows());
  p.b_eq = Eigen::VectorXd(0);
  p.A_in = A_in_;
  p.b_in = b_in0_ - S_in_ * x;
  return p;
}

Eigen::VectorXd CtmpcPolicy::shifted_plan(const State& x) const {
  const int N = settings_.base.horizon;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * N);
  w.head(N - 1) = plan_.segment(1, N - 1);
  State z = x;
  for (int k = 0; k < N - 1; ++k) {
    z = model_.A * z + model_.B * w(k);
  }
  const Interval& last = U_bar_[static_cast<size_t>(N - 1)];
  w(N - 1) = std::clamp(-lqr_.K.dot(z), last.lo, last.hi);
  w.segment(N, N - 1) = plan_.tail(N - 1);
  return w;
}

PolicyOutput CtmpcPolicy::compute(const State& x) {
  if (is_diverged(x)) {
    has_plan_ = false;
    return {0.0, PolicyStatus::kDivergedGuard};
  }
  const Eigen::VectorXd f = F_ * x;
  const Eigen::VectorXd b = b_in0_ - S_in_ * x;
  const Eigen::MatrixXd no_eq(0, H_.rows());
  const Eigen::VectorXd no_b(0);
  Eigen::VectorXd warm;
  if (has_plan_) {
    warm = shifted_plan(x);
  }
  last_ = solver_.solve(f, no_eq, no_b, A_in_, b, has_plan_ ? &warm : nullptr);
  if (last_.status != QpStatus::kOptimal) {
    has_plan_ = false;
    return {0.0, PolicyStatus::kInfeasible};
  }
  plan_ = last_.primal;
  has_plan_ = true;
  const double u_max = settings_.base.u_max;
  return {std::clamp(plan_(0), -u_max, u_max), PolicyStatus::kOk};
}

std::unique_ptr<ControllerPolicy> CtmpcPolicy::clone() const {
  auto copy = std::make_unique<CtmpcPolicy>(*this);
  copy->reset();
  return copy;
}

}  // namespace twip
