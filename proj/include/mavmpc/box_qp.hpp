#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mavmpc {

/// min 0.5 z'Hz + g'z  s.t.  lb <= z <= ub
struct BoxQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  int size() const { return static_cast<int>(g.size()); }
  double objective(const Eigen::VectorXd& z) const { return 0.5 * z.dot(H * z) + g.dot(z); }
};

struct QpSolution {
  Eigen::VectorXd z;
  int iterations = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;
};

struct QpOptions {
  double tolerance = 1e-8;  // absolute KKT
  int max_iterations = 200;
};

class QpError : public std::runtime_error {
 public:
  enum class Kind { InvalidProblem, NotPositiveDefinite, IterationLimit };

  QpError(Kind kind, const std::string& what, std::optional<QpSolution> best = std::nullopt)
      : std::runtime_error(what), kind_(kind), best_(std::move(best)) {}

  Kind kind() const { return kind_; }
  /// Best iterate reached, set for IterationLimit.
  const std::optional<QpSolution>& best() const { return best_; }

 private:
  Kind kind_;
  std::optional<QpSolution> best_;
};

/// KKT residual of a box QP at z: free coordinates contribute |grad|,
/// coordinates at a bound contribute the wrong-signed part of the multiplier.
double box_kkt_residual(const BoxQp& qp, const Eigen::VectorXd& z);

/// Primal active-set solver for strictly convex box-constrained QPs.
///
/// Single-constraint exchanges: a blocking bound is added per step (lowest
/// index on ties), and the bound with the most violating multiplier is
/// released once the subspace minimizer is reached. Each working-set change
/// refactors the reduced Hessian, which is fine at MPC sizes (n <= ~60).
/// The objective is non-increasing over iterations.
///
/// Holds a workspace; one solve at a time per instance.
class BoxQpSolver {
 public:
  explicit BoxQpSolver(QpOptions options = {}) : options_(options) {}

  QpSolution solve(const BoxQp& qp,
                   const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

  const QpOptions& options() const { return options_; }
  /// Objective after every iteration of the last solve.
  const std::vector<double>& objective_trace() const { return trace_; }

 private:
  enum class Bound : signed char { Free, Lower, Upper };

  QpOptions options_;
  std::vector<Bound> state_;
  std::vector<int> free_;
  std::vector<double> trace_;
  Eigen::VectorXd grad_;
};

inline QpSolution solve_box_qp(const BoxQp& qp,
                               const std::optional<Eigen::VectorXd>& warm_start = std::nullopt,
                               QpOptions options = {}) {
  BoxQpSolver solver(options);
  return solver.solve(qp, warm_start);
}

}  // namespace mavmpc
