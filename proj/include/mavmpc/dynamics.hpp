#pragma once

#include "mavmpc/types.hpp"

namespace mavmpc {

/// Z-Y-X Euler rotation R_z(psi) R_y(theta) R_x(phi), body to inertial.
Matrix3 rotation_zyx(double phi, double theta, double psi);

/// Continuous dynamics: translational motion with lumped rotor drag plus the
/// first-order closed-loop attitude response. Thrust is mass-normalized.
/// Throws InvalidInput on non-finite input or negative thrust.
Vector9 eval_dynamics(const MavState& x, const AttitudeThrustCommand& u,
                      const ExternalForce& f, const ModelParams& params);

/// Vector form used by the integrators. `input` is (phi_cmd, theta_cmd, thrust).
/// No validation; callers own the checks.
Vector9 dynamics(const Vector9& x, const Vector3& input, double psi_rate_cmd,
                 const Vector3& f_ext, const ModelParams& params);

/// Analytic Jacobians of `dynamics`.
struct DynamicsJacobian {
  Matrix9 dx;
  Matrix93 du;
  Matrix93 df;  // w.r.t. external force
};

DynamicsJacobian dynamics_jacobian(const Vector9& x, const Vector3& input,
                                   const Vector3& f_ext, const ModelParams& params);

/// Continuous-time hover linearization on the heading-free 8-state.
struct ContinuousLinearModel {
  Matrix8 A;
  Matrix83 B;
  Matrix83 Bd;
};

ContinuousLinearModel linearize_hover(const ModelParams& params);

/// x+ = A x + B u + Bd F, with u = (phi_I_cmd, theta_I_cmd, T_cmd - g).
struct LinearModel {
  Matrix8 A;
  Matrix83 B;
  Matrix83 Bd;
  double dt = 0.0;
};

/// Exact zero-order-hold discretization via the augmented matrix exponential.
LinearModel discretize_zoh(const ContinuousLinearModel& cont, double dt);

struct AttitudePair {
  double phi;
  double theta;
};

/// Heading-free (inertial) roll/pitch to body roll/pitch for heading psi.
AttitudePair rotate_cmd_to_body(double phi_inertial, double theta_inertial, double psi);

/// Inverse of rotate_cmd_to_body.
AttitudePair rotate_body_to_heading_free(double phi, double theta, double psi);

/// Lift compensation (T_cmd + g) / (cos phi cos theta), clamped to the thrust
/// limits. Throws InvalidInput at or beyond +-pi/2.
double compensate_thrust(double t_cmd, double phi, double theta, const ModelParams& params);

}  // namespace mavmpc
