#pragma once

#include "mavmpc/types.hpp"

namespace mavmpc {

using Vector12 = Eigen::Matrix<double, 12, 1>;
using Matrix12 = Eigen::Matrix<double, 12, 12>;

/// Augmented estimate: (p, v, phi, theta, psi, F_ext) and its covariance.
struct EkfState {
  Vector12 x = Vector12::Zero();
  Matrix12 cov = Matrix12::Identity();

  MavState vehicle() const { return MavState::from_vector(x.head<9>()); }
  ExternalForce force() const { return {x.tail<3>()}; }
};

/// Continuous process noise spectral densities and measurement deviations.
struct NoiseConfig {
  double position_psd = 1e-6;      // m^2/s
  double velocity_psd = 1e-3;      // (m/s)^2/s
  double attitude_psd = 1e-4;      // rad^2/s
  double force_psd = 0.5;          // N^2/s, force random walk
  double position_std = 1e-3;      // m
  double velocity_std = 1e-2;      // m/s
  double attitude_std = deg_to_rad(0.2);
  double initial_force_std = 2.0;  // N

  void validate() const;
};

/// Propagates the mean with the implicit RK4 step of the vehicle model, the
/// force held constant, and the covariance through the step sensitivities.
EkfState ekf_predict(const EkfState& state, const AttitudeThrustCommand& u, double dt,
                     const ModelParams& params, const NoiseConfig& noise);

/// Update with a direct measurement of (p, v, phi, theta, psi); Joseph form.
/// Throws EstimatorError when the innovation covariance is not invertible.
EkfState ekf_update(const EkfState& state, const MavState& measurement, const NoiseConfig& noise);

/// Initial estimate at a measured state with zero force.
EkfState ekf_initial(const MavState& measured, const NoiseConfig& noise);

class DisturbanceEkf {
 public:
  DisturbanceEkf(ModelParams params, NoiseConfig noise);

  void reset(const MavState& measured);
  void predict(const AttitudeThrustCommand& u, double dt);
  void update(const MavState& measurement);

  const EkfState& state() const { return state_; }
  ExternalForce force() const { return state_.force(); }
  bool initialized() const { return initialized_; }

 private:
  ModelParams params_;
  NoiseConfig noise_;
  EkfState state_;
  bool initialized_ = false;
};

}  // namespace mavmpc
