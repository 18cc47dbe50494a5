#pragma once

#include "mavmpc/box_qp.hpp"
#include "mavmpc/controller.hpp"
#include "mavmpc/dynamics.hpp"
#include "mavmpc/reference.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mavmpc {

struct RiccatiOptions {
  double tolerance = 1e-9;
  int max_iterations = 100000;
};

/// Stabilizing solution of the discrete algebraic Riccati equation
///   P = Q + A'PA - A'PB (R + B'PB)^-1 B'PA
/// by fixed-point iteration from P = Q. Throws std::runtime_error when the
/// residual does not drop below tolerance within the iteration cap.
Eigen::MatrixXd riccati_terminal(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                 const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                                 RiccatiOptions options = {});

/// Max-abs residual of the DARE at P.
double riccati_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                        const Eigen::MatrixXd& P);

/// Generic linear tracking OCP with a constant disturbance over the horizon:
///   min sum_{k<N} |x_k - xr_k|_Q^2 + |u_k - ur_k|_R^2 + |x_N - xr_N|_P^2
///   x_{k+1} = A x_k + B u_k + Bd d,   u_min <= u_k <= u_max
struct CondensingProblem {
  Eigen::MatrixXd A, B, Bd, Q, R, P;
  Eigen::VectorXd x0, disturbance;
  std::vector<Eigen::VectorXd> x_ref;  // N+1
  std::vector<Eigen::VectorXd> u_ref;  // N
  Eigen::VectorXd u_min, u_max;

  int horizon() const { return static_cast<int>(u_ref.size()); }
};

/// Box QP over stacked inputs; qp.objective(U) + constant equals the OCP cost.
struct CondensedQp {
  BoxQp qp;
  double constant = 0.0;
  /// Predicted states X = free_response + input_map * U, stacked x_0..x_N.
  Eigen::VectorXd free_response;
  Eigen::MatrixXd input_map;
};

/// States are eliminated by forward substitution. Throws InvalidInput on
/// dimension mismatch.
CondensedQp build_condensed_qp(const CondensingProblem& problem);

/// OCP cost of an input sequence by direct forward simulation.
double simulate_cost(const CondensingProblem& problem, const Eigen::VectorXd& stacked_inputs);

/// Inputs of the LMPC: heading-free roll/pitch commands and T_cmd (thrust
/// minus g). Thrust bounds are the physical ones shifted by -g.
Eigen::VectorXd lmpc_input_lower(const ModelParams& params);
Eigen::VectorXd lmpc_input_upper(const ModelParams& params);

/// Steady-state target for the linear model: attitude rows hold the tilt that
/// cancels the estimated force and drag at the reference velocity while
/// producing the reference acceleration; input references are that tilt over
/// the inner-loop gains. Reduces to the plain feed-forward with zero attitude
/// rows when the force is zero and the reference is at rest.
ReferenceWindow lmpc_equilibrium_target(const ReferenceWindow& window, const ExternalForce& f_est,
                                        const ModelParams& params);

/// Hover-linearized MPC on the heading-free model with lift compensation.
class LinearMpc final : public TrackingController {
 public:
  LinearMpc(ModelParams params, OcpConfig config);

  /// One receding-horizon solve. `ref` is on the prediction grid with
  /// heading-free feed-forward (window built at psi = 0).
  ControlOutput step(const MavState& x, const ExternalForce& f_est, const ReferenceWindow& ref);

  ControlOutput step(const MavState& x, const ExternalForce& f_est, const Trajectory& traj,
                     double t) override;
  void reset() override;
  std::string name() const override { return "lmpc"; }

  const LinearModel& model() const { return model_; }
  const Matrix8& terminal_weight() const { return terminal_; }
  const OcpConfig& config() const { return config_; }
  const ModelParams& params() const { return params_; }
  /// Objective of the last solve (OCP cost including constants).
  double last_objective() const { return last_objective_; }
  const Eigen::VectorXd& last_solution() const { return last_solution_; }

  /// Problem the next `step` would solve, exposed for analysis and tests.
  CondensingProblem problem(const Vector8& x0, const ExternalForce& f_est,
                            const ReferenceWindow& target) const;

 private:
  ModelParams params_;
  OcpConfig config_;
  LinearModel model_;
  Matrix8 terminal_;
  BoxQpSolver solver_;
  Eigen::VectorXd last_solution_;
  double last_objective_ = 0.0;
  AttitudeThrustCommand last_command_;
  int calls_since_shift_ = 0;
};

}  // namespace mavmpc
