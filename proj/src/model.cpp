#include "twip/model.hpp"

#include <cmath>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>

#include "twip/errors.hpp"

namespace twip {
namespace {

void require_positive(double value, const char* name) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw DomainError(std::string("TwipParams.") + name + " must be finite and positive, got " +
                      std::to_string(value));
  }
}

}  // namespace

void TwipParams::validate() const {
  require_positive(d, "d");
  require_positive(l, "l");
  require_positive(r, "r");
  require_positive(m_B, "m_B");
  require_positive(m_W, "m_W");
  require_positive(J, "J");
  require_positive(g, "g");
  require_positive(i_gb, "i_gb");
  require_positive(R_M, "R_M");
  require_positive(I_2, "I_2");
  // A zero motor constant is allowed: it switches off actuation and back-EMF,
  // which the energy-conservation probes rely on.
  if (!std::isfinite(K_m) || K_m < 0.0) {
    throw DomainError("TwipParams.K_m must be finite and non-negative");
  }
  // d1(theta) = I_O m_O - a^2 cos^2(theta) is smallest at theta = 0.
  if (!(d1(0.0) > 0.0)) {
    throw DomainError("TwipParams: I_O * m_O must exceed a^2 so that d1(theta) > 0");
  }
}

double TwipParams::d1(double theta) const {
  const double c = std::cos(theta);
  return I_O() * m_O() - a() * a() * c * c;
}

TwipModel::TwipModel(const TwipParams& params) : params_(params) {
  params_.validate();
  a_ = params_.a();
  io_ = params_.I_O();
  mo_ = params_.m_O();
  torque_gain_ = 2.0 * params_.i_gb * params_.K_m / params_.R_M;
  back_emf_ = params_.K_m * params_.i_gb;
}

double TwipModel::torque(const State& x, double u) const {
  return torque_gain_ * (u - back_emf_ * (x[kVelocity] / params_.r - x[kPitchRate]));
}

Vector4 TwipModel::derivative_unchecked(const State& x, double u) const {
  const double xdot = x[kVelocity];
  const double theta = x[kPitch];
  const double thetadot = x[kPitchRate];
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  const double d1 = io_ * mo_ - a_ * a_ * c * c;
  const double T = torque(x, u);
  const double g = params_.g;
  const double r = params_.r;

  const double xddot =
      (a_ * io_ * thetadot * thetadot * s - a_ * a_ * g * s * c + T * (io_ / r + a_ * c)) / d1;
  const double thetaddot =
      (-a_ * a_ * thetadot * thetadot * s * c + a_ * mo_ * g * s - T * (mo_ + a_ / r * c)) / d1;
  return {xdot, xddot, thetadot, thetaddot};
}

Vector4 TwipModel::derivative(const State& x, double u) const {
  if (!x.allFinite() || !std::isfinite(u)) {
    throw DomainError("continuous_dynamics: non-finite state or input");
  }
  return derivative_unchecked(x, u);
}

ContinuousLinearization TwipModel::linearize() const {
  // Partials of the equations of motion at theta = thetadot = xdot = 0, u = 0.
  // There sin(theta) ~ theta, cos(theta) = 1, quadratic rate terms vanish and
  // d1 = I_O m_O - a^2.
  const double r = params_.r;
  const double g = params_.g;
  const double d1 = io_ * mo_ - a_ * a_;
  const double x_gain = (io_ / r + a_) / d1;   // dxddot/dT
  const double th_gain = -(mo_ + a_ / r) / d1;  // dthetaddot/dT
  const double dT_du = torque_gain_;
  const double dT_dxdot = -torque_gain_ * back_emf_ / r;
  const double dT_dthetadot = torque_gain_ * back_emf_;

  ContinuousLinearization lin;
  lin.A.setZero();
  lin.B.setZero();
  lin.A(kPosition, kVelocity) = 1.0;
  lin.A(kPitch, kPitchRate) = 1.0;

  lin.A(kVelocity, kVelocity) = x_gain * dT_dxdot;
  lin.A(kVelocity, kPitch) = -a_ * a_ * g / d1;
  lin.A(kVelocity, kPitchRate) = x_gain * dT_dthetadot;
  lin.B(kVelocity) = x_gain * dT_du;

  lin.A(kPitchRate, kVelocity) = th_gain * dT_dxdot;
  lin.A(kPitchRate, kPitch) = a_ * mo_ * g / d1;
  lin.A(kPitchRate, kPitchRate) = th_gain * dT_dthetadot;
  lin.B(kPitchRate) = th_gain * dT_du;
  return lin;
}

State TwipModel::step(const State& x, double u, double Ts, int substeps) const {
  if (substeps < 1) {
    throw DomainError("step_nonlinear: substeps must be >= 1");
  }
  if (!(Ts > 0.0)) {
    throw DomainError("step_nonlinear: Ts must be positive");
  }
  const double h = Ts / substeps;
  State s = x;
  for (int i = 0; i < substeps; ++i) {
    const Vector4 k1 = derivative_unchecked(s, u);
    const Vector4 k2 = derivative_unchecked(s + 0.5 * h * k1, u);
    const Vector4 k3 = derivative_unchecked(s + 0.5 * h * k2, u);
    const Vector4 k4 = derivative_unchecked(s + h * k3, u);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!s.allFinite()) {
      break;
    }
  }
  return s;
}

Vector4 continuous_dynamics(const State& x, double u, const TwipParams& p) {
  return TwipModel(p).derivative(x, u);
}

ContinuousLinearization linearize(const TwipParams& p) { return TwipModel(p).linearize(); }

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> discretize_zoh(const Eigen::MatrixXd& A_c,
                                                           const Eigen::MatrixXd& B_c,
                                                           double Ts) {
  if (!(Ts > 0.0)) {
    throw DomainError("discretize_zoh: Ts must be positive");
  }
  const Eigen::Index n = A_c.rows();
  const Eigen::Index m = B_c.cols();
  if (A_c.cols() != n || B_c.rows() != n) {
    throw DomainError("discretize_zoh: dimension mismatch");
  }
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = A_c * Ts;
  M.topRightCorner(n, m) = B_c * Ts;
  const Eigen::MatrixXd E = M.exp();
  return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

LinearDiscreteModel discretize_zoh(const Matrix4& A_c, const Vector4& B_c, double Ts) {
  auto [A, B] = discretize_zoh(Eigen::MatrixXd(A_c), Eigen::MatrixXd(B_c), Ts);
  LinearDiscreteModel out;
  out.A = A;
  out.B = B.col(0);
  out.Ts = Ts;
  return out;
}

State step_nonlinear(const State& x, double u, const TwipParams& p, double Ts, int substeps) {
  return TwipModel(p).step(x, u, Ts, substeps);
}

bool is_diverged(const State& x) {
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(x[i]) || std::abs(x[i]) > kDivergenceBound) {
      return true;
    }
  }
  return false;
}

double mechanical_energy(const State& x, const TwipParams& p) {
  const double a = p.a();
  const double xdot = x[kVelocity];
  const double thetadot = x[kPitchRate];
  const double c = std::cos(x[kPitch]);
  return 0.5 * p.m_O() * xdot * xdot + a * c * xdot * thetadot + 0.5 * p.I_O() * thetadot * thetadot +
         a * p.g * c;
}

}  // namespace twip
