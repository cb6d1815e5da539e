#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>

#include "twip/control_math.hpp"
#include "twip/controllers.hpp"
#include "twip/geometry.hpp"
#include "twip/model.hpp"

namespace twip {

/// (-|P A_cl| + sqrt(|P A_cl|^2 + lambda_min(Q) lambda_max(P))) / lambda_max(P)
/// with spectral norms. Below this gain a remainder |g(x)| < gamma |x| keeps
/// V(x) = x'Px decreasing along x+ = A_cl x + g(x).
double gamma_bound(const SymmetricMatrix& P, const Eigen::MatrixXd& A_cl, const SymmetricMatrix& Q);

/// g(x) = step_nonlinear(x, sat(-K x)) - A_cl x for the sampled closed loop.
class ClosedLoopRemainder {
 public:
  ClosedLoopRemainder(const TwipParams& params, const LinearDiscreteModel& model,
                      const Eigen::RowVector4d& K, double u_max, int substeps = 1);

  Vector4 operator()(const State& x) const;
  /// x+ of the nonlinear saturated-LQR closed loop.
  State next(const State& x) const;

  const Matrix4& A_cl() const { return A_cl_; }
  const Eigen::RowVector4d& K() const { return K_; }
  double u_max() const { return u_max_; }

 private:
  TwipModel plant_;
  Matrix4 A_cl_;
  Eigen::RowVector4d K_;
  double u_max_;
  double Ts_;
  int substeps_;
};

using RemainderFn = std::function<Vector4(const State&)>;

struct RhoSearchOptions {
  double safety = 0.99;
  double r_max = 1.0;
  int bisection_steps = 20;
  int sphere_samples = 100000;  ///< split evenly over radii r, r/2, r/4, r/8
  int ball_samples = 10000;
  std::uint64_t seed = 7;
  unsigned threads = 0;
};

/// Largest sampled max |g(x)|/|x| over the probe set of radius r.
double max_remainder_ratio(const RemainderFn& g, double r, const RhoSearchOptions& options);

/// Bisection for the largest r in (0, min(r_max, u_max/|K|)] whose probe set
/// satisfies |g(x)|/|x| <= safety * gamma. Throws CertificationError when even
/// the smallest probe radius fails.
double find_rho(const RemainderFn& g, double gamma, double K_norm, double u_max,
                const RhoSearchOptions& options = {});

/// {x : x'Px <= level} with level = lambda_min(P) rho^2 inside the ball |x| < rho.
struct CertifiedInvariantSet {
  SymmetricMatrix P;
  Eigen::RowVector4d K;
  Matrix4 A_cl;
  double gamma = 0.0;
  double gamma_bound = 0.0;
  double rho = 0.0;
  double level = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double PA_norm = 0.0;
  double max_ratio = 0.0;  ///< largest |g|/|x| seen while accepting rho
  double u_max = 0.0;
  std::uint64_t probe_samples = 0;

  bool contains(const State& x) const { return P.quadratic_form(x) <= level; }
  /// max |K x| over the set, sqrt(level K P^-1 K')
  double max_feedback() const;
};

struct CertificationOptions {
  double gamma_margin = 0.99;  ///< gamma = margin * gamma_bound
  RhoSearchOptions rho;
  int substeps = 1;
};

CertifiedInvariantSet build_invariant_set(const TwipParams& params, const LinearDiscreteModel& model,
                                          const LqrDesign& lqr, double u_max,
                                          const CertificationOptions& options = {});

struct RevalidationReport {
  std::uint64_t samples = 0;
  std::uint64_t violations = 0;
  double max_ratio = 0.0;
};

/// Fresh pass over the radius-rho probe set with its own seed, counting
/// samples with |g(x)| >= gamma |x|.
RevalidationReport revalidate_rho(const RemainderFn& g, const CertifiedInvariantSet& set,
                                  std::uint64_t samples, std::uint64_t seed, unsigned threads = 0);

struct DecreaseReport {
  std::uint64_t samples = 0;
  std::uint64_t violations = 0;
  double max_ratio = -std::numeric_limits<double>::infinity();  ///< max V(x+)/V(x)
};

/// Uniform samples in the set (skipping |x| < 1e-9) checked for V(x+) < V(x).
DecreaseReport verify_decrease(const ClosedLoopRemainder& loop, const CertifiedInvariantSet& set,
                               std::uint64_t samples, std::uint64_t seed, unsigned threads = 0);

/// Uniform point in {x : x'Px <= level} from a unit-ball point y.
State ellipsoid_point(const CertifiedInvariantSet& set, const Eigen::Vector4d& y);

struct AdmissibilityReport {
  std::string controller;
  double alpha_star = std::numeric_limits<double>::infinity();
  double level = 0.0;
  bool admissible = false;
  Eigen::Index constraint_rows = 0;
};

/// alpha* of the intersection of `constraints` with {|K x| <= input_limit}.
AdmissibilityReport check_admissibility(const CertifiedInvariantSet& set, const Polytope& constraints,
                                        double input_limit, const std::string& controller);

/// X, the LQR input preimage and the terminal set.
AdmissibilityReport check_admissibility(const CertifiedInvariantSet& set, const MpcPolicy& policy);

/// The stage-N tightened state and input sets and the tightened terminal set.
AdmissibilityReport check_admissibility(const CertifiedInvariantSet& set, const CtmpcPolicy& policy);

}  // namespace twip
