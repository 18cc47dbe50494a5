#include "mavmpc/types.hpp"

#include "mavmpc/errors.hpp"

#include <string>

namespace mavmpc {

InputLimits InputLimits::from_newtons(double angle_max_rad, double thrust_min_n,
                                      double thrust_max_n, double mass) {
  if (!(mass > 0.0)) throw InvalidInput("mass must be positive");
  InputLimits l;
  l.phi_min = -angle_max_rad;
  l.phi_max = angle_max_rad;
  l.theta_min = -angle_max_rad;
  l.theta_max = angle_max_rad;
  l.thrust_min = thrust_min_n / mass;
  l.thrust_max = thrust_max_n / mass;
  l.validate();
  return l;
}

void InputLimits::validate() const {
  auto check = [](double lo, double hi, const char* name) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
      throw InvalidInput(std::string("input limits: ") + name + " requires min < max");
  };
  check(phi_min, phi_max, "phi");
  check(theta_min, theta_max, "theta");
  check(thrust_min, thrust_max, "thrust");
  if (thrust_min < 0.0) throw InvalidInput("input limits: thrust_min must be >= 0");
}

void ModelParams::validate() const {
  auto positive = [](double value, const char* name) {
    if (!std::isfinite(value) || !(value > 0.0))
      throw InvalidInput(std::string("model params: ") + name + " must be > 0");
  };
  positive(mass, "mass");
  positive(g, "g");
  positive(tau_phi, "tau_phi");
  positive(tau_theta, "tau_theta");
  positive(k_phi, "k_phi");
  positive(k_theta, "k_theta");
  if (!std::isfinite(k_drag) || k_drag < 0.0)
    throw InvalidInput("model params: k_drag must be >= 0");
  limits.validate();
}

Vector9 MavState::to_vector() const {
  Vector9 x;
  x << p, v, phi, theta, psi;
  return x;
}

MavState MavState::from_vector(const Vector9& x) {
  MavState s;
  s.p = x.segment<3>(0);
  s.v = x.segment<3>(3);
  s.phi = x(6);
  s.theta = x(7);
  s.psi = x(8);
  return s;
}

bool MavState::finite() const { return to_vector().allFinite(); }

bool AttitudeThrustCommand::within(const InputLimits& l) const {
  return phi_cmd >= l.phi_min && phi_cmd <= l.phi_max && theta_cmd >= l.theta_min &&
         theta_cmd <= l.theta_max && thrust_cmd >= l.thrust_min && thrust_cmd <= l.thrust_max;
}

}  // namespace mavmpc
