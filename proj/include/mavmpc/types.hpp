#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>

namespace mavmpc {

inline constexpr int kStateDim = 9;        // p, v, phi, theta, psi
inline constexpr int kLinearStateDim = 8;  // p, v, heading-free phi, theta
inline constexpr int kInputDim = 3;        // phi_cmd, theta_cmd, thrust

using Vector3 = Eigen::Vector3d;
using Vector8 = Eigen::Matrix<double, 8, 1>;
using Vector9 = Eigen::Matrix<double, 9, 1>;
using Matrix3 = Eigen::Matrix3d;
using Matrix8 = Eigen::Matrix<double, 8, 8>;
using Matrix9 = Eigen::Matrix<double, 9, 9>;
using Matrix83 = Eigen::Matrix<double, 8, 3>;
using Matrix93 = Eigen::Matrix<double, 9, 3>;

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Box on the attitude/thrust command. Thrust is mass-normalized (m/s^2).
struct InputLimits {
  double phi_min = deg_to_rad(-45.0);
  double phi_max = deg_to_rad(45.0);
  double theta_min = deg_to_rad(-45.0);
  double theta_max = deg_to_rad(45.0);
  double thrust_min = 13.5 / 3.42;
  double thrust_max = 40.3 / 3.42;

  /// Limits from physical thrust bounds in Newtons.
  static InputLimits from_newtons(double angle_max_rad, double thrust_min_n,
                                  double thrust_max_n, double mass);

  void validate() const;
};

/// Vehicle and inner-loop attitude parameters. Defaults describe a 3.42 kg hexacopter.
struct ModelParams {
  double mass = 3.42;
  double g = 9.81;
  /// Lumped rotor drag, per unit of mass-normalized thrust.
  double k_drag = 0.01;
  double tau_phi = 0.1901;
  double tau_theta = 0.1721;
  double k_phi = 0.91;
  double k_theta = 0.96;
  InputLimits limits{};

  void validate() const;
};

struct MavState {
  Vector3 p = Vector3::Zero();
  Vector3 v = Vector3::Zero();
  double phi = 0.0;
  double theta = 0.0;
  double psi = 0.0;

  Vector9 to_vector() const;
  static MavState from_vector(const Vector9& x);
  bool finite() const;
};

struct AttitudeThrustCommand {
  double phi_cmd = 0.0;
  double theta_cmd = 0.0;
  double psi_rate_cmd = 0.0;
  double thrust_cmd = 0.0;  // m/s^2

  Vector3 input() const { return {phi_cmd, theta_cmd, thrust_cmd}; }
  bool within(const InputLimits& limits) const;
};

/// External force in the inertial frame, Newtons.
struct ExternalForce {
  Vector3 newtons = Vector3::Zero();

  static ExternalForce zero() { return {}; }
};

}  // namespace mavmpc
