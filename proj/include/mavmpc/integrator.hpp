#pragma once

#include "mavmpc/types.hpp"

namespace mavmpc {

struct StepResult {
  Vector9 x_next;
  Matrix9 dx;    // d x_next / d x
  Matrix93 du;   // d x_next / d (phi_cmd, theta_cmd, thrust)
  Matrix93 df;   // d x_next / d F_ext
  int newton_iterations = 0;
};

struct IntegratorOptions {
  double tolerance = 1e-10;  // stage residual, infinity norm
  int max_newton_iterations = 20;
};

/// One step of the 2-stage Gauss-Legendre collocation method (order 4).
///
/// The stage equations K = f(x + h A K) are solved by Newton with the analytic
/// Jacobian of f. Sensitivities follow from differentiating the converged
/// stage equations, so they are exact derivatives of the discrete map.
/// Throws IntegratorError when Newton does not converge.
StepResult integrate_step(const Vector9& x, const Vector3& input, double psi_rate_cmd,
                          const Vector3& f_ext, double dt, const ModelParams& params,
                          IntegratorOptions options = {});

/// Same step without sensitivities (still solves the stages by Newton).
Vector9 integrate_state(const Vector9& x, const Vector3& input, double psi_rate_cmd,
                        const Vector3& f_ext, double dt, const ModelParams& params,
                        IntegratorOptions options = {});

/// Classic explicit RK4 step; the simulator's truth integrator.
Vector9 rk4_step(const Vector9& x, const Vector3& input, double psi_rate_cmd,
                 const Vector3& f_ext, double dt, const ModelParams& params);

}  // namespace mavmpc
