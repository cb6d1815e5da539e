#pragma once

#include <Eigen/Dense>

namespace twip {

using Matrix4 = Eigen::Matrix4d;
using Vector4 = Eigen::Vector4d;

/// Pendulum state [x_w, xdot_w, theta, thetadot]. Pitch is not wrapped.
using State = Eigen::Vector4d;

enum StateIndex : int {
  kPosition = 0,
  kVelocity = 1,
  kPitch = 2,
  kPitchRate = 3,
};

/// States whose magnitude exceeds this bound (or that are non-finite) are
/// treated as diverged by the simulation.
inline constexpr double kDivergenceBound = 1e6;

/// Physical constants of the two-wheeled inverted pendulum.
///
/// Both wheels carry a geared DC motor; `m_W` and `J` are per wheel and the
/// torque produced by the two motors acts on the common axle.
struct TwipParams {
  double d = 0.10;          ///< wheel separation [m]
  double l = 0.01;          ///< axle to center-of-mass distance [m]
  double r = 0.04;          ///< wheel radius [m]
  double m_B = 0.368;       ///< body mass [kg]
  double m_W = 0.02;        ///< mass of each wheel [kg]
  double J = 2.25e-5;       ///< spin inertia of each wheel [kg m^2]
  double g = 9.81;          ///< gravitational acceleration [m/s^2]
  double i_gb = 49.86;      ///< gearbox ratio [-]
  double K_m = 1.5e-3;      ///< motor constant [N m/A]
  double R_M = 12.0;        ///< motor coil resistance [Ohm]
  double I_2 = 2.1748e-4;   ///< body pitch-axis inertia [kg m^2]

  /// Throws DomainError unless every constant is finite and positive and
  /// I_O * m_O > a^2 (so d1(theta) > 0 for every theta). K_m may be zero.
  void validate() const;

  double a() const { return m_B * l; }
  double I_O() const { return I_2 + m_B * l * l; }
  double m_O() const { return m_B + 2.0 * m_W + 2.0 * J / (r * r); }
  double d1(double theta) const;

  bool operator==(const TwipParams&) const = default;
};

/// Discrete-time linear model x+ = A x + B u sampled with period Ts.
struct LinearDiscreteModel {
  Matrix4 A = Matrix4::Identity();
  Vector4 B = Vector4::Zero();
  double Ts = 0.01;
};

struct ContinuousLinearization {
  Matrix4 A;
  Vector4 B;
};

/// Nonlinear pendulum dynamics with parameters validated once at construction.
class TwipModel {
 public:
  explicit TwipModel(const TwipParams& params = {});

  const TwipParams& params() const { return params_; }

  /// [xdot, xddot, thetadot, thetaddot]. Throws DomainError on non-finite input.
  Vector4 derivative(const State& x, double u) const;

  /// Same as derivative() without input checks; used inside the integrator.
  Vector4 derivative_unchecked(const State& x, double u) const;

  /// Axle torque produced by the two motors for voltage u.
  double torque(const State& x, double u) const;

  /// Analytic Jacobians of derivative() at x = 0, u = 0.
  ContinuousLinearization linearize() const;

  /// Classical RK4 over Ts split into `substeps` equal intervals, input held.
  /// Non-finite results are returned as-is; callers test is_diverged().
  State step(const State& x, double u, double Ts, int substeps = 1) const;

 private:
  TwipParams params_;
  double a_;
  double io_;
  double mo_;
  double torque_gain_;
  double back_emf_;
};

Vector4 continuous_dynamics(const State& x, double u, const TwipParams& p);
ContinuousLinearization linearize(const TwipParams& p);

/// Exact zero-order-hold discretization via the matrix exponential of
/// [[A_c, B_c], [0, 0]] * Ts.
LinearDiscreteModel discretize_zoh(const Matrix4& A_c, const Vector4& B_c, double Ts);

/// Generic-size ZOH used for tests and small auxiliary systems.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> discretize_zoh(const Eigen::MatrixXd& A_c,
                                                           const Eigen::MatrixXd& B_c,
                                                           double Ts);

State step_nonlinear(const State& x, double u, const TwipParams& p, double Ts, int substeps = 1);

bool is_diverged(const State& x);

/// Total mechanical energy (kinetic + potential) of the rigid-body model; used
/// for integrator accuracy probes.
double mechanical_energy(const State& x, const TwipParams& p);

}  // namespace twip
