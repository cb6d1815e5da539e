#include "twip/qp.hpp"

#include <cmath>
#include <limits>

#include "twip/errors.hpp"

namespace twip {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Givens-based update of J and R after appending the constraint whose
// transformed normal is d = J' n. Returns false on linear dependence.
bool add_constraint(Eigen::MatrixXd& J, Eigen::MatrixXd& R, Eigen::VectorXd& d, int& q, double& r_norm) {
  const Eigen::Index n = J.rows();
  for (Eigen::Index j = n - 1; j >= q + 1; --j) {
    double cc = d(j - 1);
    double ss = d(j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) {
      continue;
    }
    d(j) = 0.0;
    ss /= h;
    cc /= h;
    if (cc < 0.0) {
      cc = -cc;
      ss = -ss;
      d(j - 1) = -h;
    } else {
      d(j - 1) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double t1 = J(k, j - 1);
      const double t2 = J(k, j);
      J(k, j - 1) = t1 * cc + t2 * ss;
      J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
    }
  }
  ++q;
  R.col(q - 1).head(q) = d.head(q);
  if (std::abs(d(q - 1)) <= kEps * r_norm) {
    return false;
  }
  r_norm = std::max(r_norm, std::abs(d(q - 1)));
  return true;
}

void delete_constraint(Eigen::MatrixXd& J, Eigen::MatrixXd& R, std::vector<int>& active,
                       Eigen::VectorXd& u, int& q, int position) {
  const Eigen::Index n = J.rows();
  for (int i = position; i < q - 1; ++i) {
    active[static_cast<size_t>(i)] = active[static_cast<size_t>(i) + 1];
    u(i) = u(i + 1);
    R.col(i) = R.col(i + 1);
  }
  active[static_cast<size_t>(q) - 1] = -1;
  u(q - 1) = 0.0;
  R.col(q - 1).setZero();
  --q;
  for (int j = position; j < q; ++j) {
    double cc = R(j, j);
    double ss = R(j + 1, j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) {
      continue;
    }
    cc /= h;
    ss /= h;
    R(j + 1, j) = 0.0;
    if (cc < 0.0) {
      R(j, j) = -h;
      cc = -cc;
      ss = -ss;
    } else {
      R(j, j) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = j + 1; k < q; ++k) {
      const double t1 = R(j, k);
      const double t2 = R(j + 1, k);
      R(j, k) = t1 * cc + t2 * ss;
      R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      const double t1 = J(k, j);
      const double t2 = J(k, j + 1);
      J(k, j) = t1 * cc + t2 * ss;
      J(k, j + 1) = xny * (J(k, j) + t1) - t2;
    }
  }
}

}  // namespace

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal:
      return "optimal";
    case QpStatus::kInfeasible:
      return "infeasible";
    case QpStatus::kMaxIterations:
      return "max_iterations";
  }
  return "unknown";
}

double KktResiduals::max() const {
  return std::max({stationarity, primal_feasibility, dual_feasibility, complementarity});
}

KktResiduals kkt_residuals(const QpProblem& p, const QpSolution& s) {
  KktResiduals k;
  Eigen::VectorXd grad = p.H * s.primal + p.f;
  if (p.A_eq.rows() > 0) {
    grad += p.A_eq.transpose() * s.dual_eq;
    k.primal_feasibility = (p.A_eq * s.primal - p.b_eq).cwiseAbs().maxCoeff();
  }
  if (p.A_in.rows() > 0) {
    grad += p.A_in.transpose() * s.dual_in;
    const Eigen::VectorXd slack = p.A_in * s.primal - p.b_in;
    k.primal_feasibility = std::max(k.primal_feasibility, std::max(0.0, slack.maxCoeff()));
    k.dual_feasibility = std::max(0.0, -s.dual_in.minCoeff());
    k.complementarity = s.dual_in.cwiseProduct(slack).cwiseAbs().maxCoeff();
  }
  k.stationarity = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  return k;
}

DenseQpSolver::DenseQpSolver(const Eigen::MatrixXd& H, QpSettings settings)
    : H_(0.5 * (H + H.transpose())), llt_(H_), settings_(settings) {
  if (H.rows() != H.cols()) {
    throw DomainError("DenseQpSolver: Hessian must be square");
  }
  if (llt_.info() != Eigen::Success || !H.allFinite()) {
    throw DomainError("DenseQpSolver: Hessian must be positive definite");
  }
  const Eigen::Index n = H_.rows();
  // J0 = L^-T, so that J0' H J0 = I.
  J0_ = llt_.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
}

QpSolution DenseQpSolver::solve(const Eigen::VectorXd& f, const Eigen::MatrixXd& A_eq,
                                const Eigen::VectorXd& b_eq, const Eigen::MatrixXd& A_in,
                                const Eigen::VectorXd& b_in, const Eigen::VectorXd* warm_primal) const {
  const Eigen::Index n = H_.rows();
  const Eigen::Index me = A_eq.rows();
  const Eigen::Index mi = A_in.rows();
  if (f.size() != n || (me > 0 && A_eq.cols() != n) || (mi > 0 && A_in.cols() != n) ||
      b_eq.size() != me || b_in.size() != mi) {
    throw DomainError("DenseQpSolver::solve: dimension mismatch");
  }

  QpSolution out;
  out.dual_eq = Eigen::VectorXd::Zero(me);
  out.dual_in = Eigen::VectorXd::Zero(mi);
  const int max_iterations = settings_.max_iterations > 0
                                 ? settings_.max_iterations
                                 : static_cast<int>(10 * (n + me + mi) + 50);

  Eigen::MatrixXd J = J0_;
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  std::vector<int> active(static_cast<size_t>(n), -1);  // eq rows: id, ineq rows: me + id
  int q = 0;
  double r_norm = 1.0;
  Eigen::VectorXd x = -llt_.solve(f);
  Eigen::VectorXd d(n);
  Eigen::VectorXd z(n);
  Eigen::VectorXd r(n);

  auto finish = [&](QpStatus status) {
    out.status = status;
    out.primal = x;
    out.objective = 0.5 * x.dot(H_ * x) + f.dot(x);
    out.active_set.clear();
    for (int k = 0; k < q; ++k) {
      const int id = active[static_cast<size_t>(k)];
      if (id < me) {
        out.dual_eq(id) = -u(k);
      } else {
        out.dual_in(id - me) = u(k);
        out.active_set.push_back(static_cast<int>(id - me));
      }
    }
    return out;
  };

  auto compute_step = [&](const Eigen::VectorXd& normal) {
    d.noalias() = J.transpose() * normal;
    z.noalias() = J.rightCols(n - q) * d.tail(n - q);
    if (q > 0) {
      r.head(q) = R.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));
    }
  };

  // Equality constraints are added first and never dropped.
  for (Eigen::Index i = 0; i < me; ++i) {
    const Eigen::VectorXd normal = A_eq.row(i).transpose();
    compute_step(normal);
    const double zn = z.dot(normal);
    const double s = normal.dot(x) - b_eq(i);
    if (std::abs(zn) <= kEps * std::max(1.0, normal.norm())) {
      if (std::abs(s) > settings_.feasibility_tol * (1.0 + std::abs(b_eq(i)))) {
        return finish(QpStatus::kInfeasible);
      }
      continue;  // dependent and consistent
    }
    const double t = -s / zn;
    x += t * z;
    if (q > 0) {
      u.head(q) -= t * r.head(q);
    }
    if (!add_constraint(J, R, d, q, r_norm)) {
      return finish(QpStatus::kInfeasible);
    }
    u(q - 1) = t;
    active[static_cast<size_t>(q) - 1] = static_cast<int>(i);
  }

  // Rows active at the warm-start point get priority when several are violated.
  std::vector<char> preferred(static_cast<size_t>(mi), 0);
  if (warm_primal != nullptr && warm_primal->size() == n && mi > 0) {
    const Eigen::VectorXd res = b_in - A_in * (*warm_primal);
    for (Eigen::Index i = 0; i < mi; ++i) {
      preferred[static_cast<size_t>(i)] = std::abs(res(i)) <= 1e-8 * (1.0 + std::abs(b_in(i))) ? 1 : 0;
    }
  }

  std::vector<char> is_active(static_cast<size_t>(mi), 0);
  Eigen::VectorXd slack(mi);
  for (int iter = 0;; ++iter) {
    out.iterations = iter;
    if (iter >= max_iterations) {
      return finish(QpStatus::kMaxIterations);
    }
    if (mi == 0) {
      return finish(QpStatus::kOptimal);
    }
    slack.noalias() = b_in - A_in * x;
    int p = -1;
    double worst = 0.0;
    int p_pref = -1;
    double worst_pref = 0.0;
    for (Eigen::Index i = 0; i < mi; ++i) {
      if (is_active[static_cast<size_t>(i)]) {
        continue;
      }
      const double tol = settings_.feasibility_tol * (1.0 + std::abs(b_in(i)));
      if (slack(i) < -tol) {
        if (slack(i) < worst) {
          worst = slack(i);
          p = static_cast<int>(i);
        }
        if (preferred[static_cast<size_t>(i)] && slack(i) < worst_pref) {
          worst_pref = slack(i);
          p_pref = static_cast<int>(i);
        }
      }
    }
    if (p_pref >= 0) {
      p = p_pref;
    }
    if (p < 0) {
      return finish(QpStatus::kOptimal);
    }

    // In the >= convention the violated row is n'x >= -b with n = -a.
    const Eigen::VectorXd normal = -A_in.row(p).transpose();
    double u_plus = 0.0;
    double s_p = slack(p);
    while (true) {
      if (++iter >= max_iterations) {
        out.iterations = iter;
        return finish(QpStatus::kMaxIterations);
      }
      compute_step(normal);
      // Dual (partial) step: largest step keeping active inequality multipliers >= 0.
      double t1 = kInf;
      int drop = -1;
      for (int k = 0; k < q; ++k) {
        if (active[static_cast<size_t>(k)] >= me && r(k) > 0.0) {
          const double ratio = u(k) / r(k);
          if (ratio < t1) {
            t1 = ratio;
            drop = k;
          }
        }
      }
      // Primal (full) step: makes the violated row active.
      double t2 = kInf;
      const double zn = z.dot(normal);
      if (z.norm() > kEps * std::max(1.0, x.norm()) && std::abs(zn) > kEps) {
        t2 = -s_p / zn;
      }
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) {
        out.iterations = iter;
        return finish(QpStatus::kInfeasible);
      }
      if (!std::isfinite(t2)) {
        if (q > 0) {
          u.head(q) -= t * r.head(q);
        }
        u_plus += t;
        is_active[static_cast<size_t>(active[static_cast<size_t>(drop)] - me)] = 0;
        delete_constraint(J, R, active, u, q, drop);
        continue;
      }
      x += t * z;
      if (q > 0) {
        u.head(q) -= t * r.head(q);
      }
      u_plus += t;
      if (t2 <= t1) {
        if (!add_constraint(J, R, d, q, r_norm)) {
          out.iterations = iter;
          return finish(QpStatus::kInfeasible);
        }
        u(q - 1) = u_plus;
        active[static_cast<size_t>(q) - 1] = static_cast<int>(me + p);
        is_active[static_cast<size_t>(p)] = 1;
        break;
      }
      is_active[static_cast<size_t>(active[static_cast<size_t>(drop)] - me)] = 0;
      delete_constraint(J, R, active, u, q, drop);
      s_p = b_in(p) - A_in.row(p).dot(x);
    }
  }
}

QpSolution solve_qp(const QpProblem& problem, const std::optional<Eigen::VectorXd>& warm_start) {
  const DenseQpSolver solver(problem.H);
  const Eigen::Index n = problem.H.rows();
  const Eigen::MatrixXd A_eq = problem.A_eq.size() == 0 ? Eigen::MatrixXd(0, n) : problem.A_eq;
  const Eigen::MatrixXd A_in = problem.A_in.size() == 0 ? Eigen::MatrixXd(0, n) : problem.A_in;
  return solver.solve(problem.f, A_eq, problem.b_eq, A_in, problem.b_in,
                      warm_start ? &*warm_start : nullptr);
}

}  // namespace twip
