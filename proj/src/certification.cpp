#include "twip/certification.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "twip/errors.hpp"
#include "twip/parallel.hpp"
#include "twip/random.hpp"

namespace twip {

double gamma_bound(const SymmetricMatrix& P, const Eigen::MatrixXd& A_cl, const SymmetricMatrix& Q) {
  const double pa = spectral_norm(P.matrix() * A_cl);
  const double lmax = lambda_max(P);
  const double qmin = lambda_min(Q);
  if (!(lmax > 0.0) || !(qmin > 0.0)) {
    throw DomainError("gamma_bound: P and Q must be positive definite");
  }
  return (-pa + std::sqrt(pa * pa + qmin * lmax)) / lmax;
}

ClosedLoopRemainder::ClosedLoopRemainder(const TwipParams& params, const LinearDiscreteModel& model,
                                         const Eigen::RowVector4d& K, double u_max, int substeps)
    : plant_(params), A_cl_(model.A - model.B * K), K_(K), u_max_(u_max), Ts_(model.Ts),
      substeps_(substeps) {
  if (substeps_ < 1) {
    throw DomainError("ClosedLoopRemainder: substeps must be at least 1");
  }
}

State ClosedLoopRemainder::next(const State& x) const {
  const double u = std::clamp(-K_.dot(x), -u_max_, u_max_);
  return plant_.step(x, u, Ts_, substeps_);
}

Vector4 ClosedLoopRemainder::operator()(const State& x) const { return next(x) - A_cl_ * x; }

namespace {

Eigen::Vector4d random_direction(CounterRng& rng) {
  Eigen::Vector4d d;
  do {
    for (int i = 0; i < 4; ++i) {
      d(i) = rng.normal();
    }
  } while (d.norm() < 1e-12);
  return d.normalized();
}

// Probe point `index` of the set used for radius r: the first sphere_count
// indices lie on spheres of radius r, r/2, r/4, r/8 in turn, the rest are
// uniform in the ball. Directions depend only on (seed, index).
Eigen::Vector4d probe_point(std::uint64_t seed, std::uint64_t index, std::uint64_t sphere_count,
                            double r) {
  CounterRng rng(seed, index);
  const Eigen::Vector4d d = random_direction(rng);
  if (index < sphere_count) {
    return d * (r / static_cast<double>(1u << (index % 4)));
  }
  return d * (r * std::pow(rng.uniform(), 0.25));
}

struct RatioScan {
  double max_ratio = 0.0;
  std::uint64_t above = 0;
};

RatioScan scan_ratios(const RemainderFn& g, double r, std::uint64_t spheres, std::uint64_t balls,
                      std::uint64_t seed, double threshold, unsigned threads) {
  const std::uint64_t total = spheres + balls;
  const unsigned t = resolve_threads(threads);
  std::vector<RatioScan> partial(t);
  parallel_chunks(total, t, [&](std::size_t begin, std::size_t end, unsigned w) {
    RatioScan local;
    for (std::size_t i = begin; i < end; ++i) {
      const Eigen::Vector4d x = probe_point(seed, i, spheres, r);
      const double nx = x.norm();
      if (nx == 0.0) {
        continue;
      }
      const double ratio = g(x).norm() / nx;
      // NaN counts as a violation.
      if (!(ratio < threshold)) {
        ++local.above;
      }
      if (!(ratio <= local.max_ratio)) {
        local.max_ratio = std::isnan(ratio) ? std::numeric_limits<double>::infinity() : ratio;
      }
    }
    partial[w] = local;
  });
  RatioScan out;
  for (const auto& p : partial) {
    out.max_ratio = std::max(out.max_ratio, p.max_ratio);
    out.above += p.above;
  }
  return out;
}

}  // namespace

double max_remainder_ratio(const RemainderFn& g, double r, const RhoSearchOptions& options) {
  return scan_ratios(g, r, static_cast<std::uint64_t>(options.sphere_samples),
                     static_cast<std::uint64_t>(options.ball_samples), options.seed,
                     std::numeric_limits<double>::infinity(), options.threads)
      .max_ratio;
}

double find_rho(const RemainderFn& g, double gamma, double K_norm, double u_max,
                const RhoSearchOptions& options) {
  if (!(gamma > 0.0) || !(options.safety > 0.0 && options.safety < 1.0) ||
      !(options.r_max > 0.0) || options.bisection_steps < 1 || options.sphere_samples < 0 ||
      options.ball_samples < 0) {
    throw DomainError("find_rho: invalid gamma or search options");
  }
  const double threshold = options.safety * gamma;
  double hi = options.r_max;
  if (K_norm > 0.0) {
    hi = std::min(hi, u_max / K_norm);
  }
  auto accepted = [&](double r) {
    return max_remainder_ratio(g, r, options) <= threshold;
  };
  if (accepted(hi)) {
    return hi;
  }
  double lo = 0.0;
  for (int i = 0; i < options.bisection_steps; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (accepted(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (!(lo > 0.0)) {
    std::ostringstream msg;
    msg << "find_rho: no radius down to " << hi << " keeps |g(x)|/|x| below " << threshold;
    throw CertificationError(msg.str());
  }
  return lo;
}

double CertifiedInvariantSet::max_feedback() const {
  const Eigen::LLT<Eigen::MatrixXd> llt(P.matrix());
  const Eigen::VectorXd k = K.transpose();
  return std::sqrt(level * k.dot(llt.solve(k)));
}

CertifiedInvariantSet build_invariant_set(const TwipParams& params, const LinearDiscreteModel& model,
                                          const LqrDesign& lqr, double u_max,
                                          const CertificationOptions& options) {
  if (!(options.gamma_margin > 0.0 && options.gamma_margin < 1.0)) {
    throw DomainError("build_invariant_set: gamma margin must lie in (0, 1)");
  }
  CertifiedInvariantSet set;
  set.K = lqr.K;
  set.A_cl = lqr.A_cl;
  set.u_max = u_max;
  const SymmetricMatrix I4(Eigen::MatrixXd::Identity(4, 4));
  set.P = solve_discrete_lyapunov(lqr.A_cl, I4.matrix());
  set.lambda_min = lambda_min(set.P);
  set.lambda_max = lambda_max(set.P);
  set.PA_norm = spectral_norm(set.P.matrix() * lqr.A_cl);
  set.gamma_bound = gamma_bound(set.P, lqr.A_cl, I4);
  set.gamma = options.gamma_margin * set.gamma_bound;

  const ClosedLoopRemainder loop(params, model, lqr.K, u_max, options.substeps);
  const RemainderFn g = [&loop](const State& x) { return loop(x); };
  set.rho = find_rho(g, set.gamma, lqr.K.norm(), u_max, options.rho);
  set.max_ratio = max_remainder_ratio(g, set.rho, options.rho);
  set.probe_samples =
      static_cast<std::uint64_t>(options.rho.sphere_samples + options.rho.ball_samples);
  set.level = set.lambda_min * set.rho * set.rho;
  return set;
}

RevalidationReport revalidate_rho(const RemainderFn& g, const CertifiedInvariantSet& set,
                                  std::uint64_t samples, std::uint64_t seed, unsigned threads) {
  const std::uint64_t spheres = samples - samples / 11;
  const RatioScan scan = scan_ratios(g, set.rho, spheres, samples - spheres, seed, set.gamma, threads);
  return {samples, scan.above, scan.max_ratio};
}

State ellipsoid_point(const CertifiedInvariantSet& set, const Eigen::Vector4d& y) {
  // P = L L' and x = sqrt(level) L^-T y gives x'Px = level |y|^2.
  const Eigen::LLT<Eigen::MatrixXd> llt(set.P.matrix());
  return std::sqrt(set.level) * llt.matrixU().solve(Eigen::VectorXd(y));
}

DecreaseReport verify_decrease(const ClosedLoopRemainder& loop, const CertifiedInvariantSet& set,
                               std::uint64_t samples, std::uint64_t seed, unsigned threads) {
  const Eigen::LLT<Eigen::MatrixXd> llt(set.P.matrix());
  const Eigen::Matrix4d LinvT = llt.matrixU().solve(Eigen::MatrixXd::Identity(4, 4));
  const double scale = std::sqrt(set.level);
  const unsigned t = resolve_threads(threads);
  std::vector<DecreaseReport> partial(t);
  parallel_chunks(samples, t, [&](std::size_t begin, std::size_t end, unsigned w) {
    DecreaseReport local;
    for (std::size_t i = begin; i < end; ++i) {
      CounterRng rng(seed, i);
      const Eigen::Vector4d d = random_direction(rng);
      const State x = scale * (LinvT * (d * std::pow(rng.uniform(), 0.25)));
      if (x.norm() < 1e-9) {
        continue;
      }
      ++local.samples;
      const double v0 = set.P.quadratic_form(x);
      const double v1 = set.P.quadratic_form(loop.next(x));
      const double ratio = v1 / v0;
      if (!(v1 < v0)) {
        ++local.violations;
      }
      local.max_ratio = std::max(local.max_ratio, std::isnan(ratio) ? 1e300 : ratio);
    }
    partial[w] = local;
  });
  DecreaseReport out;
  for (const auto& p : partial) {
    out.samples += p.samples;
    out.violations += p.violations;
    out.max_ratio = std::max(out.max_ratio, p.max_ratio);
  }
  return out;
}

AdmissibilityReport check_admissibility(const CertifiedInvariantSet& set, const Polytope& constraints,
                                        double input_limit, const std::string& controller) {
  AdmissibilityReport rep;
  rep.controller = controller;
  rep.level = set.level;
  Polytope all = constraints;
  if (std::isfinite(input_limit)) {
    Eigen::MatrixXd A(2, 4);
    A << set.K, -set.K;
    const Eigen::Vector2d b(input_limit, input_limit);
    all = constraints.rows() > 0 ? constraints.intersect(Polytope(A, b)) : Polytope(A, b);
  }
  rep.constraint_rows = all.rows();
  rep.alpha_star = max_ellipsoid_level_in_polytope(set.P, all);
  rep.admissible = rep.alpha_star >= set.level;
  return rep;
}

AdmissibilityReport check_admissibility(const CertifiedInvariantSet& set, const MpcPolicy& policy) {
  const Polytope c = policy.state_set().intersect(policy.terminal_set());
  return check_admissibility(set, c, policy.input_limit(), policy.name());
}

AdmissibilityReport check_admissibility(const CertifiedInvariantSet& set, const CtmpcPolicy& policy) {
  const int N = policy.settings().base.horizon;
  const Interval& u = policy.tightened_input(N);
  const Polytope c = policy.tightened_state_set(N).intersect(policy.tightened_terminal_set());
  return check_admissibility(set, c, std::min(u.hi, -u.lo), policy.name());
}

}  // namespace twip
