#pragma once

#include "mavmpc/box_qp.hpp"
#include "mavmpc/controller.hpp"
#include "mavmpc/dynamics.hpp"
#include "mavmpc/integrator.hpp"
#include "mavmpc/reference.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mavmpc {

/// Multiple-shooting variables: N+1 state nodes and N controls
/// (phi_cmd, theta_cmd, thrust) on a uniform grid.
struct ShootingGrid {
  std::vector<Vector9> nodes;
  std::vector<Vector3> controls;
  double dt_pred = 0.1;

  int horizon() const { return static_cast<int>(controls.size()); }
};

/// Reference for the nonlinear OCP on the prediction grid.
struct NmpcReference {
  std::vector<Vector9> x_ref;  // N+1
  std::vector<Vector3> u_ref;  // N
  double psi_rate_cmd = 0.0;   // heading rate held over the horizon
};

/// Body attitude and thrust that realize a desired inertial acceleration at
/// velocity v under force f_ext and heading psi, including rotor drag.
struct AttitudeThrust {
  double phi;
  double theta;
  double thrust;
};
AttitudeThrust invert_acceleration(const Vector3& acc, const Vector3& v, const Vector3& f_ext,
                                   double psi, const ModelParams& params);

/// Reference on the grid: p, v and heading from the trajectory; attitude rows
/// and input references are the exact equilibrium that produces the reference
/// acceleration under the estimated force.
NmpcReference nmpc_reference(const Trajectory& traj, double t0, int horizon, double dt_pred,
                             double psi_now, double psi_rate_cmd, const ExternalForce& f_est,
                             const ModelParams& params);

/// Linearization and condensed Gauss-Newton QP around the current grid.
/// The QP gradient is affine in the embedding parameter
/// p = (x_now - nodes[0], F_now - F_prepared): g = g0 + G p.
struct RtiWorkspace {
  std::vector<Matrix9> A;
  std::vector<Matrix93> B;
  std::vector<Matrix93> D;         // sensitivity to the external force
  std::vector<Vector9> defects;    // Phi(s_k, q_k) - s_{k+1}
  Eigen::MatrixXd state_map;       // d(stacked dS) / d(stacked dQ)
  Eigen::MatrixXd embedding_map;   // d(stacked dS) / dp, 12 columns
  Eigen::VectorXd defect_response; // stacked dS from defects alone
  Eigen::VectorXd residual;        // stacked s + defect_response - x_ref
  Eigen::MatrixXd H;
  Eigen::VectorXd g0;
  Eigen::MatrixXd G;
  Eigen::VectorXd lb, ub;          // bounds on dQ
  Vector3 f_prepared = Vector3::Zero();
  double control_cost = 0.0;       // sum |q - u_ref|_R^2
  bool ready = false;
};

struct RtiFeedback {
  AttitudeThrustCommand command;
  bool fault = false;
  int qp_iterations = 0;
  double step_norm = 0.0;  // infinity norm of the applied control update
};

/// Nonlinear MPC: multiple shooting with implicit RK4 and one Gauss-Newton
/// SQP iteration (real-time iteration) per control call.
///
/// prepare() and feedback() alternate; they may run in different threads but
/// never concurrently on the same instance.
class NonlinearMpc final : public TrackingController {
 public:
  NonlinearMpc(ModelParams params, OcpConfig config);

  ControlOutput step(const MavState& x, const ExternalForce& f_est, const Trajectory& traj,
                     double t) override;
  void reset() override;
  std::string name() const override { return "nmpc"; }

  /// Preparation phase: linearize along the grid and condense.
  void prepare(const NmpcReference& ref, const ExternalForce& f_est);
  /// Feedback phase: embed the state, solve the QP, apply the full step.
  RtiFeedback feedback(const MavState& x_now, const ExternalForce& f_est);
  /// Shift nodes and controls one interval; the last control is repeated and
  /// the new terminal node is integrated.
  void shift();

  /// Grid initialized at x with controls u_ref (nodes all equal to x).
  void initialize_grid(const MavState& x, const NmpcReference& ref);
  /// Grid initialized by forward simulation of the given controls.
  void initialize_grid_rollout(const MavState& x, const std::vector<Vector3>& controls,
                               const NmpcReference& ref, const ExternalForce& f_est);

  /// Stationarity of the prepared QP at zero step, initial-value mismatch and
  /// continuity defects (all infinity norms), for state x_now.
  double kkt_residual(const MavState& x_now) const;
  double max_defect() const;

  /// Cost of the OCP evaluated directly on the grid.
  double grid_cost(const NmpcReference& ref) const;
  /// Gauss-Newton model cost at the current iterate (zero step, p = 0).
  double model_cost_at_iterate() const;

  const ShootingGrid& grid() const { return grid_; }
  void set_grid(ShootingGrid grid);
  const RtiWorkspace& workspace() const { return ws_; }
  const Matrix9& state_weight() const { return q9_; }
  const Matrix9& terminal_weight() const { return p9_; }
  const Matrix3& input_weight() const { return config_.input_weight; }
  const ModelParams& params() const { return params_; }
  const OcpConfig& config() const { return config_; }
  const QpSolution& last_qp() const { return last_qp_; }

 private:
  ModelParams params_;
  OcpConfig config_;
  Matrix9 q9_;
  Matrix9 p9_;
  ShootingGrid grid_;
  NmpcReference ref_;
  RtiWorkspace ws_;
  BoxQpSolver solver_;
  QpSolution last_qp_;
  AttitudeThrustCommand last_command_;
  bool initialized_ = false;
  int calls_since_shift_ = 0;
};

}  // namespace mavmpc
