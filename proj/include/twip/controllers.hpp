#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "twip/control_math.hpp"
#include "twip/geometry.hpp"
#include "twip/model.hpp"
#include "twip/qp.hpp"
#include "twip/soft_qp.hpp"

namespace twip {

enum class PolicyStatus {
  kOk,
  kInfeasible,     ///< the optimization problem had no solution (or the solver gave up)
  kDivergedGuard,  ///< the state was non-finite or beyond the divergence bound
};

const char* to_string(PolicyStatus status);

struct PolicyOutput {
  double u = 0.0;
  PolicyStatus status = PolicyStatus::kOk;
};

/// State feedback u = pi(x) with |u| <= u_max. Implementations may keep
/// warm-start state between calls, so an instance must not be shared across
/// threads; use clone() to give each worker its own copy.
class ControllerPolicy {
 public:
  virtual ~ControllerPolicy() = default;

  virtual PolicyOutput compute(const State& x) = 0;
  virtual std::unique_ptr<ControllerPolicy> clone() const = 0;
  /// Drops warm-start data; called before each new trajectory.
  virtual void reset() {}
  virtual std::string name() const = 0;
  virtual double input_limit() const = 0;
};

struct LqrDesign {
  Eigen::RowVector4d K;  ///< u = -K x
  SymmetricMatrix P;     ///< DARE solution, also the MPC terminal weight
  Matrix4 A_cl;          ///< A - B K
};

LqrDesign synthesize_lqr(const LinearDiscreteModel& model, const Matrix4& Q, double R);

/// u = clamp(-K x, -u_max, u_max)
class LqrPolicy final : public ControllerPolicy {
 public:
  LqrPolicy(Eigen::RowVector4d K, double u_max);

  PolicyOutput compute(const State& x) override;
  std::unique_ptr<ControllerPolicy> clone() const override;
  std::string name() const override { return "lqr"; }
  double input_limit() const override { return u_max_; }

  const Eigen::RowVector4d& gain() const { return K_; }

 private:
  Eigen::RowVector4d K_;
  double u_max_;
};

/// Weights and limits shared by both predictive controllers.
struct PredictiveSettings {
  int horizon = 20;
  Matrix4 Q = Matrix4::Identity();
  double R = 1.0;
  double u_max = 2.2;
  Polytope X;  ///< state constraint set
  double slack_weight = 1e5;
};

/// Condensed predictions x_k = Phi_k x0 + Gamma_k U for k = 1..N, stacked.
struct Prediction {
  Eigen::MatrixXd Phi;    ///< 4N x 4
  Eigen::MatrixXd Gamma;  ///< 4N x N

  Prediction(const LinearDiscreteModel& model, int horizon);
  int horizon() const { return static_cast<int>(Gamma.cols()); }
  /// x_1..x_N for the given initial state and input sequence, as columns.
  Eigen::Matrix<double, 4, Eigen::Dynamic> states(const State& x0, const Eigen::VectorXd& U) const;
};

/// Linear MPC with quadratically penalized per-row slacks on the state and
/// terminal constraints and hard input bounds, solved in condensed form over
/// the input sequence. The slacks are eliminated analytically (SoftQpSolver).
class MpcPolicy final : public ControllerPolicy {
 public:
  MpcPolicy(const LinearDiscreteModel& model, const LqrDesign& lqr, const PredictiveSettings& settings,
            Polytope terminal_set);

  /// Computes the terminal set as the maximal positively invariant set of
  /// the LQR closed loop under X and the input bound.
  static MpcPolicy synthesize(const LinearDiscreteModel& model, const LqrDesign& lqr,
                              const PredictiveSettings& settings);

  PolicyOutput compute(const State& x) override;
  std::unique_ptr<ControllerPolicy> clone() const override;
  void reset() override { has_plan_ = false; }
  std::string name() const override { return "mpc"; }
  double input_limit() const override { return settings_.u_max; }

  const Polytope& state_set() const { return settings_.X; }
  const Polytope& terminal_set() const { return terminal_; }
  const PredictiveSettings& settings() const { return settings_; }
  const Prediction& prediction() const { return pred_; }
  /// Input sequence from the last successful compute().
  const Eigen::VectorXd& last_plan() const { return plan_; }
  const SoftQpSolution& last_solution() const { return last_; }

  /// The QP solved by compute(x), with the slacks written out explicitly.
  SoftQpProblem problem(const State& x) const;

 private:
  Eigen::VectorXd shifted_plan(const State& x) const;

  LinearDiscreteModel model_;
  LqrDesign lqr_;
  PredictiveSettings settings_;
  Polytope terminal_;
  Prediction pred_;
  Eigen::MatrixXd H_;
  Eigen::MatrixXd F_;  // f = F x0
  Eigen::MatrixXd A_hard_;
  Eigen::VectorXd b_hard_;
  Eigen::MatrixXd A_soft_;
  Eigen::VectorXd b_soft0_;
  Eigen::MatrixXd S_soft_;  // b_soft = b_soft0 - S x0
  SoftQpSolver solver_;
  Eigen::VectorXd plan_;
  bool has_plan_ = false;
  SoftQpSolution last_;
};

/// Ancillary feedback u = v + K e with a contraction certificate
/// (A + B K)' P (A + B K) <= alpha P.
struct TubeDesign {
  Eigen::RowVector4d K;  ///< u = v + K e (note the sign)
  SymmetricMatrix P;
  double alpha = 0.815;
  double w_max = 0.075;
  double delta1 = 0.0;
  double contraction = 0.0;  ///< largest generalized eigenvalue, <= alpha
};

/// Scaled-Riccati construction: K from the DARE on (A/sqrt(alpha), B/sqrt(alpha))
/// with unit weights, P from the Lyapunov equation of the scaled closed loop
/// with Q = I. Throws SynthesisError if the contraction check fails.
TubeDesign synthesize_tube(const LinearDiscreteModel& model, double alpha, double w_max);

/// lambda_max(L^-T A_cl' P A_cl L^-1) with P = L' L.
double whitened_contraction(const Matrix4& A_cl, const SymmetricMatrix& P);

/// delta_0 = 0, delta_{i+1} = alpha delta_i + delta_1 for i = 0..N-1.
std::vector<double> tube_offsets(double alpha, double delta1, int horizon);

struct CtmpcSettings {
  PredictiveSettings base;
  double alpha = 0.815;
  double w_max = 0.075;
};

/// Constraint-tightening tube MPC. The nominal trajectory z starts at the
/// measured state, stage i is constrained to X - F_i and U - K F_i with
/// F_i = {e : e' P e <= delta_i^2}, the terminal state to RPI - F_N, and each
/// stage has one slack shared by all of its state rows.
class CtmpcPolicy final : public ControllerPolicy {
 public:
  CtmpcPolicy(const LinearDiscreteModel& model, const LqrDesign& lqr, const TubeDesign& tube,
              const CtmpcSettings& settings, Polytope rpi_terminal_set);

  /// Computes the tube and the robust terminal set, then builds the policy.
  static CtmpcPolicy synthesize(const LinearDiscreteModel& model, const LqrDesign& lqr,
                                const CtmpcSettings& settings);

  PolicyOutput compute(const State& x) override;
  std::unique_ptr<ControllerPolicy> clone() const override;
  void reset() override { has_plan_ = false; }
  std::string name() const override { return "ctmpc"; }
  double input_limit() const override { return settings_.base.u_max; }

  const TubeDesign& tube() const { return tube_; }
  const std::vector<double>& offsets() const { return delta_; }
  /// X - F_i for i = 0..N (index N is the last prediction step).
  const Polytope& tightened_state_set(int i) const { return X_bar_.at(static_cast<size_t>(i)); }
  const Interval& tightened_input(int i) const { return U_bar_.at(static_cast<size_t>(i)); }
  const Polytope& rpi_set() const { return rpi_; }
  const Polytope& tightened_terminal_set() const { return Xf_bar_; }
  const CtmpcSettings& settings() const { return settings_; }
  const Prediction& prediction() const { return pred_; }
  /// [v_0..v_{N-1}, eps_1..eps_N] from the last successful compute().
  const Eigen::VectorXd& last_plan() const { return plan_; }
  const QpSolution& last_solution() const { return last_; }

  QpProblem problem(const State& x) const;

 private:
  Eigen::VectorXd shifted_plan(const State& x) const;

  LinearDiscreteModel model_;
  LqrDesign lqr_;
  TubeDesign tube_;
  CtmpcSettings settings_;
  Polytope rpi_;
  std::vector<double> delta_;
  std::vector<Polytope> X_bar_;
  std::vector<Interval> U_bar_;
  Polytope Xf_bar_;
  Prediction pred_;
  Eigen::MatrixXd H_;
  Eigen::MatrixXd F_;
  Eigen::MatrixXd A_in_;
  Eigen::VectorXd b_in0_;
  Eigen::MatrixXd S_in_;
  DenseQpSolver solver_;
  Eigen::VectorXd plan_;
  bool has_plan_ = false;
  QpSolution last_;
};

/// The state box |xdot| <= v, |theta| <= th, |thetadot| <= w (position free).
Polytope state_constraint_box(double max_velocity, double max_pitch, double max_pitch_rate);

}  // namespace twip
