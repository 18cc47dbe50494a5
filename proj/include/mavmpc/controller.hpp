#pragma once

#include "mavmpc/reference.hpp"
#include "mavmpc/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mavmpc {

/// Horizon, grid and weights shared by both controllers.
struct OcpConfig {
  int horizon = 20;
  double dt_pred = 0.1;
  double control_period = 0.01;
  Matrix8 state_weight = default_state_weight();
  Matrix3 input_weight = default_input_weight();
  /// Unset: infinite-horizon cost from the Riccati equation of the LMPC model.
  std::optional<Matrix8> terminal_weight;
  /// Heading weight, nonlinear controller only (the linear model has no heading).
  double yaw_weight = 0.0;
  /// Symmetric heading-rate bound. Unset means unbounded for the LMPC and
  /// +-pi rad/s for the NMPC.
  std::optional<double> yaw_rate_limit;

  static Matrix8 default_state_weight();
  static Matrix3 default_input_weight();
  void validate() const;
  /// Number of control calls per prediction interval.
  int calls_per_interval() const;
};

struct ControlOutput {
  AttitudeThrustCommand command;
  bool fault = false;
  int qp_iterations = 0;
  double solve_time_s = 0.0;
  /// Predicted states on the prediction grid (heading-free angles for the LMPC).
  std::vector<Vector9> predicted;
};

class TrackingController {
 public:
  virtual ~TrackingController() = default;
  virtual ControlOutput step(const MavState& x, const ExternalForce& f_est,
                             const Trajectory& traj, double t) = 0;
  virtual void reset() = 0;
  virtual std::string name() const = 0;
};

}  // namespace mavmpc
