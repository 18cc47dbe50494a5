#include "mavmpc/box_qp.hpp"

#include <algorithm>
#include <cmath>

namespace mavmpc {

double box_kkt_residual(const BoxQp& qp, const Eigen::VectorXd& z) {
  const Eigen::VectorXd grad = qp.H * z + qp.g;
  double residual = 0.0;
  for (int i = 0; i < qp.size(); ++i) {
    if (z(i) < qp.lb(i) || z(i) > qp.ub(i)) {
      residual = std::max(residual, std::max(qp.lb(i) - z(i), z(i) - qp.ub(i)));
    }
    if (qp.lb(i) == qp.ub(i)) continue;
    if (z(i) <= qp.lb(i)) {
      residual = std::max(residual, -grad(i));
    } else if (z(i) >= qp.ub(i)) {
      residual = std::max(residual, grad(i));
    } else {
      residual = std::max(residual, std::abs(grad(i)));
    }
  }
  return residual;
}

namespace {

void validate(const BoxQp& qp) {
  const auto n = qp.g.size();
  if (n == 0 || qp.H.rows() != n || qp.H.cols() != n || qp.lb.size() != n || qp.ub.size() != n)
    throw QpError(QpError::Kind::InvalidProblem, "box QP: inconsistent dimensions");
  if (!qp.H.allFinite() || !qp.g.allFinite() || qp.lb.hasNaN() || qp.ub.hasNaN())
    throw QpError(QpError::Kind::InvalidProblem, "box QP: non-finite data");
  if ((qp.lb.array() > qp.ub.array()).any())
    throw QpError(QpError::Kind::InvalidProblem, "box QP: lb > ub");
  const double asym = (qp.H - qp.H.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * std::max(1.0, qp.H.cwiseAbs().maxCoeff()))
    throw QpError(QpError::Kind::InvalidProblem, "box QP: Hessian not symmetric");
}

}  // namespace

QpSolution BoxQpSolver::solve(const BoxQp& qp, const std::optional<Eigen::VectorXd>& warm_start) {
  validate(qp);
  const int n = qp.size();
  if (Eigen::LLT<Eigen::MatrixXd>(qp.H).info() != Eigen::Success)
    throw QpError(QpError::Kind::NotPositiveDefinite, "box QP: Hessian not positive definite");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (warm_start) {
    if (warm_start->size() != n)
      throw QpError(QpError::Kind::InvalidProblem, "box QP: warm start dimension mismatch");
    x = *warm_start;
  }
  x = x.cwiseMax(qp.lb).cwiseMin(qp.ub);
  grad_ = qp.H * x + qp.g;

  state_.assign(n, Bound::Free);
  for (int i = 0; i < n; ++i) {
    if (qp.lb(i) == qp.ub(i) || (x(i) == qp.lb(i) && grad_(i) > 0.0)) {
      state_[i] = Bound::Lower;
    } else if (x(i) == qp.ub(i) && grad_(i) < 0.0) {
      state_[i] = Bound::Upper;
    }
  }

  trace_.clear();
  trace_.push_back(qp.objective(x));
  const double tol = options_.tolerance;
  Eigen::VectorXd d_free;
  Eigen::MatrixXd h_free;

  for (int iter = 1; iter <= options_.max_iterations; ++iter) {
    free_.clear();
    double free_residual = 0.0;
    for (int i = 0; i < n; ++i) {
      if (state_[i] == Bound::Free) {
        free_.push_back(i);
        free_residual = std::max(free_residual, std::abs(grad_(i)));
      }
    }

    if (free_residual > tol) {
      // Newton step on the free subspace.
      const auto nf = static_cast<Eigen::Index>(free_.size());
      h_free.resize(nf, nf);
      d_free.resize(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        d_free(a) = -grad_(free_[a]);
        for (Eigen::Index b = 0; b < nf; ++b) h_free(a, b) = qp.H(free_[a], free_[b]);
      }
      d_free = h_free.llt().solve(d_free);

      double alpha = 1.0;
      int blocking = -1;
      Bound blocking_side = Bound::Free;
      for (Eigen::Index a = 0; a < nf; ++a) {
        const int i = free_[a];
        const double di = d_free(a);
        double ratio = alpha;
        Bound side = Bound::Free;
        if (di < 0.0) {
          ratio = (qp.lb(i) - x(i)) / di;
          side = Bound::Lower;
        } else if (di > 0.0) {
          ratio = (qp.ub(i) - x(i)) / di;
          side = Bound::Upper;
        }
        if (side != Bound::Free && ratio < alpha) {
          alpha = std::max(ratio, 0.0);
          blocking = i;
          blocking_side = side;
        }
      }

      for (Eigen::Index a = 0; a < nf; ++a) x(free_[a]) += alpha * d_free(a);
      if (blocking >= 0) {
        x(blocking) = blocking_side == Bound::Lower ? qp.lb(blocking) : qp.ub(blocking);
        state_[blocking] = blocking_side;
      }
      x = x.cwiseMax(qp.lb).cwiseMin(qp.ub);
      grad_ = qp.H * x + qp.g;
      trace_.push_back(qp.objective(x));
      continue;
    }

    // Subspace minimizer: release the worst wrong-signed multiplier, if any.
    int release = -1;
    double worst = tol;
    for (int i = 0; i < n; ++i) {
      if (qp.lb(i) == qp.ub(i)) continue;
      double violation = 0.0;
      if (state_[i] == Bound::Lower) violation = -grad_(i);
      if (state_[i] == Bound::Upper) violation = grad_(i);
      if (violation > worst) {
        worst = violation;
        release = i;
      }
    }
    if (release < 0) {
      QpSolution sol;
      sol.z = x;
      sol.iterations = iter;
      sol.kkt_residual = box_kkt_residual(qp, x);
      sol.objective = qp.objective(x);
      return sol;
    }
    state_[release] = Bound::Free;
    trace_.push_back(trace_.back());
  }

  QpSolution best;
  best.z = x;
  best.iterations = options_.max_iterations;
  best.kkt_residual = box_kkt_residual(qp, x);
  best.objective = qp.objective(x);
  throw QpError(QpError::Kind::IterationLimit, "box QP: iteration limit reached", best);
}

}  // namespace mavmpc
