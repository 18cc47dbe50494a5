#include "mavmpc/dynamics.hpp"

#include "mavmpc/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>

namespace mavmpc {
namespace {

Matrix3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Matrix3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

Matrix3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Matrix3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

Matrix3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Matrix3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

Matrix3 d_rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Matrix3 r;
  r << 0, 0, 0, 0, -s, -c, 0, c, -s;
  return r;
}

Matrix3 d_rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Matrix3 r;
  r << -s, 0, c, 0, 0, 0, -c, 0, -s;
  return r;
}

Matrix3 d_rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Matrix3 r;
  r << -s, -c, 0, c, -s, 0, 0, 0, 0;
  return r;
}

Matrix3 drag_matrix(const ModelParams& params) {
  return Eigen::Vector3d(params.k_drag, params.k_drag, 0.0).asDiagonal();
}

}  // namespace

Matrix3 rotation_zyx(double phi, double theta, double psi) {
  return rot_z(psi) * rot_y(theta) * rot_x(phi);
}

Vector9 dynamics(const Vector9& x, const Vector3& input, double psi_rate_cmd,
                 const Vector3& f_ext, const ModelParams& params) {
  const double thrust = input(2);
  const Matrix3 R = rotation_zyx(x(6), x(7), x(8));
  const Vector3 v = x.segment<3>(3);

  Vector9 dx;
  dx.segment<3>(0) = v;
  dx.segment<3>(3) = thrust * R.col(2) - thrust * (R * drag_matrix(params) * R.transpose() * v) +
                     f_ext / params.mass - Vector3(0.0, 0.0, params.g);
  dx(6) = (params.k_phi * input(0) - x(6)) / params.tau_phi;
  dx(7) = (params.k_theta * input(1) - x(7)) / params.tau_theta;
  dx(8) = psi_rate_cmd;
  return dx;
}

Vector9 eval_dynamics(const MavState& x, const AttitudeThrustCommand& u,
                      const ExternalForce& f, const ModelParams& params) {
  params.validate();
  if (!x.finite() || !std::isfinite(u.phi_cmd) || !std::isfinite(u.theta_cmd) ||
      !std::isfinite(u.psi_rate_cmd) || !std::isfinite(u.thrust_cmd) || !f.newtons.allFinite())
    throw InvalidInput("eval_dynamics: non-finite state, command or force");
  if (u.thrust_cmd < 0.0) throw InvalidInput("eval_dynamics: thrust_cmd must be >= 0");
  return dynamics(x.to_vector(), u.input(), u.psi_rate_cmd, f.newtons, params);
}

DynamicsJacobian dynamics_jacobian(const Vector9& x, const Vector3& input, const Vector3&,
                                   const ModelParams& params) {
  const double phi = x(6), theta = x(7), psi = x(8);
  const double thrust = input(2);
  const Vector3 v = x.segment<3>(3);

  const Matrix3 rx = rot_x(phi), ry = rot_y(theta), rz = rot_z(psi);
  const Matrix3 R = rz * ry * rx;
  const std::array<Matrix3, 3> dR = {rz * ry * d_rot_x(phi), rz * d_rot_y(theta) * rx,
                                     d_rot_z(psi) * ry * rx};
  const Matrix3 K = drag_matrix(params);
  const Matrix3 RKRt = R * K * R.transpose();

  DynamicsJacobian jac;
  jac.dx.setZero();
  jac.du.setZero();
  jac.df.setZero();

  jac.dx.block<3, 3>(0, 3).setIdentity();
  jac.dx.block<3, 3>(3, 3) = -thrust * RKRt;
  for (int i = 0; i < 3; ++i) {
    const Matrix3 dRKRt = dR[i] * K * R.transpose() + R * K * dR[i].transpose();
    jac.dx.block<3, 1>(3, 6 + i) = thrust * dR[i].col(2) - thrust * (dRKRt * v);
  }
  jac.dx(6, 6) = -1.0 / params.tau_phi;
  jac.dx(7, 7) = -1.0 / params.tau_theta;

  jac.du(6, 0) = params.k_phi / params.tau_phi;
  jac.du(7, 1) = params.k_theta / params.tau_theta;
  jac.du.block<3, 1>(3, 2) = R.col(2) - RKRt * v;

  jac.df.block<3, 3>(3, 0) = Matrix3::Identity() / params.mass;
  return jac;
}

ContinuousLinearModel linearize_hover(const ModelParams& params) {
  params.validate();
  const Vector9 hover = Vector9::Zero();
  const Vector3 input(0.0, 0.0, params.g);
  const DynamicsJacobian jac = dynamics_jacobian(hover, input, Vector3::Zero(), params);

  // Drop psi; at psi = 0 the heading-free angles coincide with body angles.
  ContinuousLinearModel lin;
  lin.A = jac.dx.topLeftCorner<8, 8>();
  lin.B = jac.du.topRows<8>();
  lin.Bd = jac.df.topRows<8>();
  return lin;
}

LinearModel discretize_zoh(const ContinuousLinearModel& cont, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("discretize_zoh: dt must be > 0");
  constexpr int n = kLinearStateDim, m = 2 * kInputDim;
  Eigen::Matrix<double, n + m, n + m> aug = Eigen::Matrix<double, n + m, n + m>::Zero();
  aug.topLeftCorner<n, n>() = cont.A;
  aug.block<n, 3>(0, n) = cont.B;
  aug.block<n, 3>(0, n + 3) = cont.Bd;
  const Eigen::Matrix<double, n + m, n + m> phi = (aug * dt).exp();

  LinearModel model;
  model.A = phi.topLeftCorner<n, n>();
  model.B = phi.block<n, 3>(0, n);
  model.Bd = phi.block<n, 3>(0, n + 3);
  model.dt = dt;
  return model;
}

AttitudePair rotate_cmd_to_body(double phi_inertial, double theta_inertial, double psi) {
  const double c = std::cos(psi), s = std::sin(psi);
  return {c * phi_inertial + s * theta_inertial, -s * phi_inertial + c * theta_inertial};
}

AttitudePair rotate_body_to_heading_free(double phi, double theta, double psi) {
  const double c = std::cos(psi), s = std::sin(psi);
  return {c * phi - s * theta, s * phi + c * theta};
}

double compensate_thrust(double t_cmd, double phi, double theta, const ModelParams& params) {
  constexpr double half_pi = std::numbers::pi / 2.0;
  if (!std::isfinite(t_cmd) || !std::isfinite(phi) || !std::isfinite(theta))
    throw InvalidInput("compensate_thrust: non-finite input");
  if (std::abs(phi) >= half_pi || std::abs(theta) >= half_pi)
    throw InvalidInput("compensate_thrust: attitude at or beyond +-pi/2");
  const double thrust = (t_cmd + params.g) / (std::cos(phi) * std::cos(theta));
  return std::clamp(thrust, params.limits.thrust_min, params.limits.thrust_max);
}

}  // namespace mavmpc
