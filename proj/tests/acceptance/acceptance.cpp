// Acceptance criteria A1-A9. With no argument every criterion runs; with one
// argument ("A4") only that one. One "A<n> PASS|FAIL ..." line each; the exit
// status is nonzero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "twip/certification.hpp"
#include "twip/config.hpp"
#include "twip/controllers.hpp"
#include "twip/mc_estimator.hpp"
#include "twip/model.hpp"

using namespace twip;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const PipelineConfig& defaults() {
  static const PipelineConfig c;
  return c;
}

const LinearDiscreteModel& model() {
  static const LinearDiscreteModel m = [] {
    const ContinuousLinearization lin = linearize(defaults().model);
    return discretize_zoh(lin.A, lin.B, defaults().Ts);
  }();
  return m;
}

const LqrDesign& lqr() {
  static const LqrDesign d = synthesize_lqr(model(), defaults().lqr.Q(), defaults().lqr.r);
  return d;
}

const MpcPolicy& mpc() {
  static const MpcPolicy p = MpcPolicy::synthesize(model(), lqr(), defaults().predictive_settings());
  return p;
}

const CtmpcPolicy& ctmpc() {
  static const CtmpcPolicy p = CtmpcPolicy::synthesize(model(), lqr(), defaults().ctmpc_settings());
  return p;
}

const CertifiedInvariantSet& cert_set() {
  static const CertifiedInvariantSet s = build_invariant_set(
      defaults().model, model(), lqr(), defaults().mpc.u_max, defaults().certification_options());
  return s;
}

Outcome a1() {
  Matrix4 A_pub;
  A_pub << 1, 9.883e-3, -6.524e-5, 4.471e-6,
           0, 9.768e-1, -1.276e-2, 8.620e-4,
           0, 6.175e-3, 1.008e0, 9.780e-3,
           0, 1.222e0, 1.573e0, 9.591e-1;
  const Vector4 B_pub(6.272e-5, 1.240e-2, -3.303e-3, -6.533e-1);
  double worst = 0.0;
  bool ok = true;
  auto cmp = [&](double got, double pub) {
    if (pub == 0.0) {
      ok = ok && std::abs(got) <= 1e-12;
      return;
    }
    const double rel = std::abs(got - pub) / std::abs(pub);
    worst = std::max(worst, rel);
    ok = ok && rel <= 1e-3;
  };
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) cmp(model().A(i, j), A_pub(i, j));
    cmp(model().B(i), B_pub(i));
  }
  return {ok, "max relative error " + fmt("%.3e", worst) + " (limit 1e-3)"};
}

Outcome a2() {
  const Eigen::RowVector4d K_pub(-4.291, -8.142, -9.271, -0.574);
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    worst = std::max(worst, std::abs(lqr().K(i) - K_pub(i)) / std::abs(K_pub(i)));
  }
  std::ostringstream s;
  s << "K = [" << lqr().K << "], max deviation " << fmt("%.3f", 100 * worst) << "% (limit 0.5%)";
  return {worst <= 0.005, s.str()};
}

// Unconstrained LQR prediction stays strictly inside the stage sets.
bool lqr_plan_inactive(const State& x, const std::vector<Polytope>& X, const std::vector<Interval>& U,
                       const Polytope& terminal) {
  State xk = x;
  const int N = static_cast<int>(U.size());
  for (int k = 0; k < N; ++k) {
    const double u = -lqr().K.dot(xk);
    if (!U[k].contains(u, -1e-9) || (k > 0 && !X[k].contains(xk, -1e-9))) return false;
    xk = model().A * xk + model().B * u;
  }
  return X[N].contains(xk, -1e-9) && terminal.contains(xk, -1e-9);
}

Outcome a3() {
  const int N = mpc().settings().horizon;
  const std::vector<Polytope> X(N + 1, mpc().state_set());
  const std::vector<Interval> U(N, Interval::symmetric(mpc().settings().u_max));
  std::vector<Polytope> Xt;
  std::vector<Interval> Ut;
  for (int i = 0; i <= N; ++i) Xt.push_back(ctmpc().tightened_state_set(i));
  for (int i = 0; i < N; ++i) Ut.push_back(ctmpc().tightened_input(i));

  const Polytope half = mpc().terminal_set().scaled(0.5);
  State hi;
  for (int j = 0; j < 4; ++j) hi(j) = half.support(VectorXd::Unit(4, j));
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MpcPolicy m = mpc();
  CtmpcPolicy c = ctmpc();
  int n = 0;
  double worst_m = 0.0, worst_c = 0.0;
  bool ok = true;
  for (long draws = 0; n < 1000 && draws < 100000000; ++draws) {
    const State x = State(u(rng), u(rng), u(rng), u(rng)).cwiseProduct(hi);
    if (!half.contains(x) || !lqr_plan_inactive(x, X, U, mpc().terminal_set()) ||
        !lqr_plan_inactive(x, Xt, Ut, ctmpc().tightened_terminal_set())) {
      continue;
    }
    ++n;
    const double ul = -lqr().K.dot(x);
    m.reset();
    c.reset();
    const PolicyOutput om = m.compute(x);
    const PolicyOutput oc = c.compute(x);
    ok = ok && om.status == PolicyStatus::kOk && oc.status == PolicyStatus::kOk;
    worst_m = std::max(worst_m, std::abs(om.u - ul));
    worst_c = std::max(worst_c, std::abs(oc.u - ul));
  }
  ok = ok && n == 1000 && worst_m <= 1e-4 && worst_c <= 1e-4;
  return {ok, std::to_string(n) + " states, max |u_MPC - u_LQR| = " + fmt("%.2e", worst_m) +
                  " V, max |u_CTMPC - u_LQR| = " + fmt("%.2e", worst_c) + " V (limit 1e-4)"};
}

Outcome a4() {
  const CertifiedInvariantSet& s = cert_set();
  const ClosedLoopRemainder loop(defaults().model, model(), lqr().K, defaults().mpc.u_max, defaults().substeps);
  const DecreaseReport d = verify_decrease(loop, s, 100000, 404, 0);
  std::mt19937_64 rng(405);
  std::normal_distribution<double> n(0.0, 1.0);
  int converged = 0;
  for (int t = 0; t < 100; ++t) {
    State x = ellipsoid_point(s, Eigen::Vector4d(n(rng), n(rng), n(rng), n(rng)).normalized());
    for (int k = 0; k < 2000 && x.norm() > 1e-8; ++k) x = loop.next(x);
    if (x.norm() <= 1e-8) ++converged;
  }
  const bool ok = d.samples == 100000 && d.violations == 0 && converged == 100;
  return {ok, std::to_string(d.violations) + " decrease violations in " + std::to_string(d.samples) +
                  " samples (max V+/V " + fmt("%.6f", d.max_ratio) + "), " + std::to_string(converged) +
                  "/100 boundary trajectories converged; c = " + fmt("%.4e", s.level) +
                  ", rho = " + fmt("%.4e", s.rho) + ", gamma = " + fmt("%.4e", s.gamma)};
}

Outcome a5() {
  const AdmissibilityReport m = check_admissibility(cert_set(), mpc());
  const AdmissibilityReport c = check_admissibility(cert_set(), ctmpc());
  const bool ok = m.alpha_star >= cert_set().level && c.alpha_star >= cert_set().level;
  return {ok, "c = " + fmt("%.4e", cert_set().level) + ", alpha*_MPC = " + fmt("%.4f", m.alpha_star) +
                  ", alpha*_CTMPC = " + fmt("%.4f", c.alpha_star)};
}

Outcome a6() {
  const TubeDesign t = synthesize_tube(model(), 0.815, 0.075);
  const double lam = whitened_contraction(model().A + model().B * t.K, t.P);
  const std::vector<double> d = tube_offsets(t.alpha, t.delta1, 20);
  bool exact = d.size() == 21 && d[0] == 0.0;
  for (size_t i = 0; exact && i + 1 < d.size(); ++i) {
    exact = d[i + 1] == t.alpha * d[i] + t.delta1;
  }
  return {lam <= 0.815 + 1e-9 && exact,
          "lambda_max = " + fmt("%.6f", lam) + " (limit 0.815 + 1e-9), delta_1 = " + fmt("%.6f", t.delta1) +
              ", delta_N = " + fmt("%.6f", d.back()) + ", recursion " + (exact ? "exact" : "MISMATCH")};
}

Outcome a7() {
  const LqrPolicy p(lqr().K, defaults().mpc.u_max);
  const McConfig cfg = defaults().mc_config();
  const McSummary s = run_campaign({&p}, cert_set(), defaults().model, cfg);
  const double f = s.campaigns[0].stable_fraction();
  return {std::abs(f - 0.5848) <= 0.025,
          "LQR stable fraction " + fmt("%.2f", 100 * f) + "% over " + std::to_string(cfg.n_samples) +
              " samples (seed " + std::to_string(cfg.seed) + ", std. error " +
              fmt("%.2f", 100 * s.campaigns[0].standard_error()) + " pp); target 58.48 +- 2.5"};
}

Outcome a8() {
  McConfig cfg = defaults().mc_config();
  std::vector<State> samples = sample_initial_conditions(cfg);
  samples.resize(500);
  const LqrPolicy p(lqr().K, defaults().mpc.u_max);
  const McSummary s = run_campaign(samples, {&p, &mpc(), &ctmpc()}, cert_set(), defaults().model, cfg);
  const double fl = s.campaigns[0].stable_fraction();
  const double fm = s.campaigns[1].stable_fraction();
  const double fc = s.campaigns[2].stable_fraction();
  const bool ok = std::abs(fm - fl) <= 0.02 && std::abs(fc - fl) <= 0.02;
  return {ok, "500 samples: LQR " + fmt("%.1f", 100 * fl) + "%, MPC " + fmt("%.1f", 100 * fm) + "%, CTMPC " +
                  fmt("%.1f", 100 * fc) + "%; per-sample agreement MPC " + fmt("%.3f", s.agreement(0, 1)) +
                  ", CTMPC " + fmt("%.3f", s.agreement(0, 2))};
}

Outcome a9() {
  std::vector<std::string> notes;
  bool ok = true;

  // DARE: scalar closed form and Riccati iteration.
  const MatrixXd one = MatrixXd::Ones(1, 1);
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  double dare_err = std::abs(solve_dare(one, one, one, one).P(0, 0) - phi) / phi;
  std::mt19937_64 rng(909);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 3;
    const MatrixXd A = oracle::random_matrix(rng, n, n) * 0.6;
    const MatrixXd B = oracle::random_matrix(rng, n, 1);
    const MatrixXd G = oracle::random_matrix(rng, n, n);
    const MatrixXd Q = G * G.transpose() + 0.1 * MatrixXd::Identity(n, n);
    const MatrixXd P = oracle::riccati_iteration(A, B, Q, one);
    dare_err = std::max(dare_err, (solve_dare(A, B, Q, one).P.matrix() - P).norm() / P.norm());
  }
  ok = ok && dare_err <= 1e-8;
  notes.push_back("DARE " + fmt("%.1e", dare_err));

  double lyap_err = 0.0;
  for (int t = 0; t < 30; ++t) {
    MatrixXd A = oracle::random_matrix(rng, 3, 3);
    A *= 0.9 / spectral_radius(A);
    const MatrixXd G = oracle::random_matrix(rng, 3, 3);
    const MatrixXd Q = G * G.transpose() + 0.5 * MatrixXd::Identity(3, 3);
    const MatrixXd S = oracle::lyapunov_series(A, Q);
    lyap_err = std::max(lyap_err, (solve_discrete_lyapunov(A, Q).matrix() - S).norm() / S.norm());
  }
  ok = ok && lyap_err <= 1e-10;
  notes.push_back("Lyapunov " + fmt("%.1e", lyap_err));

  int disagreements = 0;
  for (int t = 0; t < 50; ++t) {
    disagreements += oracle::pontryagin_instance(rng).disagreements;
  }
  ok = ok && disagreements == 0;
  notes.push_back("Pontryagin " + std::to_string(disagreements) + " disagreements / 50 instances");

  double qp_err = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 3 + t % 6;
    const int m = 1 + t % (n - 1);
    QpProblem p;
    const MatrixXd G = oracle::random_matrix(rng, n, n);
    p.H = G * G.transpose() + 0.1 * MatrixXd::Identity(n, n);
    p.f = oracle::random_matrix(rng, n, 1);
    p.A_eq = oracle::random_matrix(rng, m, n);
    p.b_eq = oracle::random_matrix(rng, m, 1);
    p.A_in = MatrixXd(0, n);
    p.b_in = VectorXd(0);
    const QpSolution s = solve_qp(p);
    const VectorXd z = oracle::equality_qp_kkt(p);
    qp_err = std::max(qp_err, s.status == QpStatus::kOptimal ? (s.primal - z).norm() / (1.0 + z.norm()) : 1.0);
  }
  ok = ok && qp_err <= 1e-9;
  notes.push_back("QP " + fmt("%.1e", qp_err));

  std::string d;
  for (const std::string& s : notes) d += (d.empty() ? "" : ", ") + s;
  return {ok, d};
}

struct Criterion {
  std::function<Outcome()> run;
  double hard_limit;  ///< seconds; 0 means the runtime is only a target
};

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, Criterion> criteria{
      {"A1", {a1, 1.0}},  {"A2", {a2, 1.0}}, {"A3", {a3, 60.0}}, {"A4", {a4, 120.0}}, {"A5", {a5, 10.0}},
      {"A6", {a6, 1.0}},  {"A7", {a7, 0.0}}, {"A8", {a8, 0.0}},  {"A9", {a9, 120.0}},
  };
  std::vector<std::string> selected;
  if (argc > 1) {
    for (int i = 1; i < argc; ++i) {
      if (!criteria.count(argv[i])) {
        std::cerr << "unknown criterion " << argv[i] << "\n";
        return 2;
      }
      selected.emplace_back(argv[i]);
    }
  } else {
    for (const auto& [name, c] : criteria) selected.push_back(name);
  }

  bool all = true;
  for (const std::string& name : selected) {
    const Criterion& c = criteria.at(name);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("%.2f s", secs);
    if (c.hard_limit > 0.0) {
      timing += fmt(" (limit %.0f s)", c.hard_limit);
      if (secs > c.hard_limit) {
        o.pass = false;
        o.detail += "; runtime limit exceeded";
      }
    }
    std::cout << name << (o.pass ? " PASS " : " FAIL ") << o.detail << " [" << timing << "]" << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
