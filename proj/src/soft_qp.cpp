#include "twip/soft_qp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "twip/errors.hpp"

namespace twip {

QpProblem SoftQpProblem::with_explicit_slacks() const {
  const Eigen::Index n = H.rows();
  const Eigen::Index ms = A_soft.rows();
  const Eigen::Index mh = A_hard.rows();
  QpProblem p;
  p.H = Eigen::MatrixXd::Zero(n + ms, n + ms);
  p.H.topLeftCorner(n, n) = H;
  p.H.bottomRightCorner(ms, ms) = 2.0 * weight * Eigen::MatrixXd::Identity(ms, ms);
  p.f = Eigen::VectorXd::Zero(n + ms);
  p.f.head(n) = f;
  p.A_eq = Eigen::MatrixXd(0, n + ms);
  p.b_eq = Eigen::VectorXd(0);
  p.A_in = Eigen::MatrixXd::Zero(mh + 2 * ms, n + ms);
  p.b_in = Eigen::VectorXd::Zero(mh + 2 * ms);
  if (mh > 0) {
    p.A_in.topLeftCorner(mh, n) = A_hard;
    p.b_in.head(mh) = b_hard;
  }
  if (ms > 0) {
    p.A_in.block(mh, 0, ms, n) = A_soft;
    p.A_in.block(mh, n, ms, ms) = -Eigen::MatrixXd::Identity(ms, ms);
    p.b_in.segment(mh, ms) = b_soft;
    p.A_in.block(mh + ms, n, ms, ms) = -Eigen::MatrixXd::Identity(ms, ms);
  }
  return p;
}

QpSolution SoftQpSolution::expanded(const SoftQpProblem& problem) const {
  const Eigen::Index n = qp.primal.size();
  const Eigen::Index ms = slack.size();
  const Eigen::Index mh = problem.A_hard.rows();
  QpSolution out = qp;
  out.primal.resize(n + ms);
  out.primal << qp.primal, slack;
  out.dual_eq = Eigen::VectorXd(0);
  out.dual_in = Eigen::VectorXd::Zero(mh + 2 * ms);
  if (mh > 0) {
    out.dual_in.head(mh) = qp.dual_in;
  }
  // d/d eps: 2 w eps - mu_soft - mu_nonneg = 0, with mu_nonneg = 0 wherever
  // eps > 0 and mu_soft = 0 wherever the soft row is slack.
  out.dual_in.segment(mh, ms) = 2.0 * problem.weight * slack;
  return out;
}

SoftQpSolver::SoftQpSolver(Eigen::MatrixXd H, Eigen::MatrixXd A_hard, Eigen::MatrixXd A_soft,
                           double weight, int max_iterations)
    : H_(std::move(H)), A_hard_(std::move(A_hard)), A_soft_(std::move(A_soft)), weight_(weight),
      max_iterations_(max_iterations) {
  if (!(weight_ > 0.0)) {
    throw DomainError("SoftQpSolver: weight must be positive");
  }
  if (H_.rows() != H_.cols() || (A_hard_.rows() > 0 && A_hard_.cols() != H_.rows()) ||
      (A_soft_.rows() > 0 && A_soft_.cols() != H_.rows())) {
    throw DomainError("SoftQpSolver: dimension mismatch");
  }
  if (A_hard_.rows() == 0) {
    A_hard_.resize(0, H_.rows());
  }
  if (A_soft_.rows() == 0) {
    A_soft_.resize(0, H_.rows());
  }
}

double SoftQpSolver::objective(const Eigen::VectorXd& z, const Eigen::VectorXd& f,
                               const Eigen::VectorXd& b_soft) const {
  const Eigen::VectorXd eps = (A_soft_ * z - b_soft).cwiseMax(0.0);
  return 0.5 * z.dot(H_ * z) + f.dot(z) + weight_ * eps.squaredNorm();
}

SoftQpSolution SoftQpSolver::solve(const Eigen::VectorXd& f, const Eigen::VectorXd& b_hard,
                                   const Eigen::VectorXd& b_soft,
                                   const Eigen::VectorXd* warm_start) const {
  const Eigen::Index n = H_.rows();
  const Eigen::Index ms = A_soft_.rows();
  if (f.size() != n || b_hard.size() != A_hard_.rows() || b_soft.size() != ms) {
    throw DomainError("SoftQpSolver::solve: dimension mismatch");
  }
  const Eigen::MatrixXd no_eq(0, n);
  const Eigen::VectorXd no_b(0);

  SoftQpSolution out;
  Eigen::VectorXd z;
  QpSolution inner;
  const bool warm_ok = warm_start != nullptr && warm_start->size() == n &&
                       (A_hard_.rows() == 0 ||
                        ((A_hard_ * (*warm_start) - b_hard).array() <= 1e-12).all());
  if (warm_ok) {
    z = *warm_start;
  } else {
    const DenseQpSolver base(H_);
    inner = base.solve(f, no_eq, no_b, A_hard_, b_hard);
    if (inner.status != QpStatus::kOptimal) {
      out.qp = inner;
      out.slack = (A_soft_ * inner.primal - b_soft).cwiseMax(0.0);
      return out;
    }
    z = inner.primal;
  }

  const Eigen::VectorXd* inner_warm = warm_ok ? warm_start : nullptr;
  Eigen::VectorXd last_inner_primal;
  int it = 0;
  QpStatus status = QpStatus::kMaxIterations;
  for (; it < max_iterations_; ++it) {
    const Eigen::VectorXd resid = A_soft_ * z - b_soft;
    Eigen::MatrixXd H_s = H_;
    Eigen::VectorXd f_s = f;
    for (Eigen::Index i = 0; i < ms; ++i) {
      if (resid(i) > 0.0) {
        const auto a = A_soft_.row(i);
        H_s.noalias() += (2.0 * weight_) * a.transpose() * a;
        f_s.noalias() -= (2.0 * weight_ * b_soft(i)) * a.transpose();
      }
    }
    const DenseQpSolver model(H_s);
    inner = model.solve(f_s, no_eq, no_b, A_hard_, b_hard, inner_warm);
    if (inner.status != QpStatus::kOptimal) {
      status = inner.status;
      break;
    }
    last_inner_primal = inner.primal;
    inner_warm = &last_inner_primal;
    const Eigen::VectorXd step = inner.primal - z;
    if (step.lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + z.lpNorm<Eigen::Infinity>())) {
      z = inner.primal;
      status = QpStatus::kOptimal;
      break;
    }

    // Exact line search on phi(z + t step), t in [0, 1]. phi' is continuous,
    // piecewise linear and nondecreasing in t.
    const Eigen::VectorXd s = A_soft_ * step;
    const double g0 = step.dot(H_ * z + f);
    const double c0 = step.dot(H_ * step);
    auto dphi = [&](double t) {
      double v = g0 + t * c0;
      for (Eigen::Index i = 0; i < ms; ++i) {
        const double ri = resid(i) + t * s(i);
        if (ri > 0.0) {
          v += 2.0 * weight_ * s(i) * ri;
        }
      }
      return v;
    };
    double t = 1.0;
    if (dphi(1.0) > 0.0) {
      std::vector<double> breaks{0.0};
      for (Eigen::Index i = 0; i < ms; ++i) {
        if (s(i) != 0.0) {
          const double tb = -resid(i) / s(i);
          if (tb > 0.0 && tb < 1.0) {
            breaks.push_back(tb);
          }
        }
      }
      breaks.push_back(1.0);
      std::sort(breaks.begin(), breaks.end());
      // Bracket the root between consecutive breakpoints, then solve the linear piece.
      size_t lo = 0;
      size_t hi = breaks.size() - 1;
      while (hi - lo > 1) {
        const size_t mid = (lo + hi) / 2;
        if (dphi(breaks[mid]) > 0.0) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      const double ta = breaks[lo];
      const double tb = breaks[hi];
      const double da = dphi(ta);
      const double db = dphi(tb);
      t = db > da ? ta + (tb - ta) * (-da) / (db - da) : ta;
      t = std::clamp(t, 0.0, 1.0);
    }
    if (t <= 0.0) {
      // No descent possible along the model step; z is optimal up to rounding.
      status = QpStatus::kOptimal;
      break;
    }
    z += t * step;
    if (t * step.lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + z.lpNorm<Eigen::Infinity>())) {
      status = QpStatus::kOptimal;
      break;
    }
  }

  out.slack = (A_soft_ * z - b_soft).cwiseMax(0.0);
  out.qp = inner;
  out.qp.primal = z;
  out.qp.status = status;
  out.qp.iterations = it + 1;
  out.qp.objective = objective(z, f, b_soft);
  if (out.qp.dual_in.size() != A_hard_.rows()) {
    out.qp.dual_in = Eigen::VectorXd::Zero(A_hard_.rows());
  }
  return out;
}

SoftQpSolution solve_soft_qp(const SoftQpProblem& problem, const Eigen::VectorXd* warm_start) {
  const SoftQpSolver solver(problem.H, problem.A_hard, problem.A_soft, problem.weight);
  return solver.solve(problem.f, problem.b_hard, problem.b_soft, warm_start);
}

}  // namespace twip
