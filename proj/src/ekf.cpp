#include "mavmpc/ekf.hpp"

#include "mavmpc/errors.hpp"
#include "mavmpc/integrator.hpp"

#include <Eigen/Cholesky>

#include <string>

namespace mavmpc {
namespace {

using Matrix9x12 = Eigen::Matrix<double, 9, 12>;

Matrix9 measurement_cov(const NoiseConfig& n) {
  Vector9 d;
  const double p = n.position_std * n.position_std;
  const double v = n.velocity_std * n.velocity_std;
  const double a = n.attitude_std * n.attitude_std;
  d << p, p, p, v, v, v, a, a, a;
  return d.asDiagonal();
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

}  // namespace

void NoiseConfig::validate() const {
  for (double v : {position_psd, velocity_psd, attitude_psd, force_psd, position_std, velocity_std,
                   attitude_std, initial_force_std}) {
    if (!std::isfinite(v) || !(v > 0.0)) throw InvalidInput("noise config: variances must be > 0");
  }
}

EkfState ekf_initial(const MavState& measured, const NoiseConfig& noise) {
  EkfState s;
  s.x.head<9>() = measured.to_vector();
  s.x.tail<3>().setZero();
  Vector12 d;
  d.head<9>() = measurement_cov(noise).diagonal();
  d.tail<3>().setConstant(noise.initial_force_std * noise.initial_force_std);
  s.cov = d.asDiagonal();
  return s;
}

EkfState ekf_predict(const EkfState& state, const AttitudeThrustCommand& u, double dt,
                     const ModelParams& params, const NoiseConfig& noise) {
  if (!(dt > 0.0)) throw InvalidInput("ekf_predict: dt must be > 0");
  if (!state.x.allFinite() || !state.cov.allFinite() || !u.input().allFinite() ||
      !std::isfinite(u.psi_rate_cmd))
    throw InvalidInput("ekf_predict: non-finite input");

  const StepResult st =
      integrate_step(state.x.head<9>(), u.input(), u.psi_rate_cmd, state.x.tail<3>(), dt, params);

  Matrix12 F = Matrix12::Identity();
  F.topLeftCorner<9, 9>() = st.dx;
  F.topRightCorner<9, 3>() = st.df;

  Vector12 q;
  q << Vector3::Constant(noise.position_psd), Vector3::Constant(noise.velocity_psd),
      Vector3::Constant(noise.attitude_psd), Vector3::Constant(noise.force_psd);

  EkfState out;
  out.x.head<9>() = st.x_next;
  out.x.tail<3>() = state.x.tail<3>();
  out.cov = F * state.cov * F.transpose();
  out.cov.diagonal() += q * dt;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

EkfState ekf_update(const EkfState& state, const MavState& measurement, const NoiseConfig& noise) {
  if (!measurement.finite()) throw InvalidInput("ekf_update: non-finite measurement");

  Vector9 innovation = measurement.to_vector() - state.x.head<9>();
  innovation(8) = wrap_angle(innovation(8));

  Matrix9x12 H = Matrix9x12::Zero();
  H.leftCols<9>().setIdentity();
  const Matrix9 R = measurement_cov(noise);
  const Matrix9 S = state.cov.topLeftCorner<9, 9>() + R;
  const Eigen::LLT<Matrix9> llt(S);
  if (llt.info() != Eigen::Success)
    throw EstimatorError("ekf_update: innovation covariance not invertible");

  const Eigen::Matrix<double, 12, 9> K =
      llt.solve(state.cov.topRows<9>()).transpose();  // P H' S^-1, S symmetric

  EkfState out;
  out.x = state.x + K * innovation;
  const Matrix12 I_KH = Matrix12::Identity() - K * H;
  out.cov = I_KH * state.cov * I_KH.transpose() + K * R * K.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

DisturbanceEkf::DisturbanceEkf(ModelParams params, NoiseConfig noise)
    : params_(params), noise_(noise) {
  params_.validate();
  noise_.validate();
}

void DisturbanceEkf::reset(const MavState& measured) {
  state_ = ekf_initial(measured, noise_);
  initialized_ = true;
}

void DisturbanceEkf::predict(const AttitudeThrustCommand& u, double dt) {
  state_ = ekf_predict(state_, u, dt, params_, noise_);
}

void DisturbanceEkf::update(const MavState& measurement) {
  if (!initialized_) {
    reset(measurement);
    return;
  }
  state_ = ekf_update(state_, measurement, noise_);
}

}  // namespace mavmpc
