#include "mavmpc/integrator.hpp"

#include "mavmpc/dynamics.hpp"
#include "mavmpc/errors.hpp"

#include <Eigen/LU>

#include <string>

namespace mavmpc {
namespace {

// Gauss-Legendre, s = 2.
const double kSqrt3 = std::sqrt(3.0);
const double kA[2][2] = {{0.25, 0.25 - kSqrt3 / 6.0}, {0.25 + kSqrt3 / 6.0, 0.25}};
constexpr double kB[2] = {0.5, 0.5};

using Stages = Eigen::Matrix<double, 18, 1>;
using StageMatrix = Eigen::Matrix<double, 18, 18>;

struct Collocation {
  Stages k;
  StageMatrix newton_matrix;
  DynamicsJacobian jac[2];
  int iterations = 0;
};

Collocation solve_stages(const Vector9& x, const Vector3& input, double psi_rate_cmd,
                         const Vector3& f_ext, double h, const ModelParams& params,
                         const IntegratorOptions& options) {
  if (!(h > 0.0)) throw InvalidInput("integrate_step: dt must be > 0");
  if (!x.allFinite() || !input.allFinite() || !f_ext.allFinite() || !std::isfinite(psi_rate_cmd))
    throw InvalidInput("integrate_step: non-finite input");

  Collocation c;
  const Vector9 f0 = dynamics(x, input, psi_rate_cmd, f_ext, params);
  c.k << f0, f0;

  for (int iter = 0; iter <= options.max_newton_iterations; ++iter) {
    Stages residual;
    Vector9 stage_x[2];
    for (int i = 0; i < 2; ++i) {
      stage_x[i] = x + h * (kA[i][0] * c.k.head<9>() + kA[i][1] * c.k.tail<9>());
      residual.segment<9>(9 * i) =
          c.k.segment<9>(9 * i) - dynamics(stage_x[i], input, psi_rate_cmd, f_ext, params);
    }
    for (int i = 0; i < 2; ++i) c.jac[i] = dynamics_jacobian(stage_x[i], input, f_ext, params);
    c.newton_matrix.setIdentity();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        c.newton_matrix.block<9, 9>(9 * i, 9 * j) -= h * kA[i][j] * c.jac[i].dx;

    if (!residual.allFinite()) break;
    if (residual.lpNorm<Eigen::Infinity>() <= options.tolerance) {
      c.iterations = iter;
      return c;
    }
    if (iter == options.max_newton_iterations) break;
    c.k -= c.newton_matrix.partialPivLu().solve(residual);
  }
  throw IntegratorError("integrate_step: Newton did not converge in " +
                        std::to_string(options.max_newton_iterations) + " iterations");
}

Vector9 combine(const Vector9& x, const Stages& k, double h) {
  return x + h * (kB[0] * k.head<9>() + kB[1] * k.tail<9>());
}

}  // namespace

StepResult integrate_step(const Vector9& x, const Vector3& input, double psi_rate_cmd,
                          const Vector3& f_ext, double dt, const ModelParams& params,
                          IntegratorOptions options) {
  const Collocation c = solve_stages(x, input, psi_rate_cmd, f_ext, dt, params, options);

  // Implicit function theorem: M dK/dp = df/dp at each stage point.
  Eigen::Matrix<double, 18, 9 + 3 + 3> rhs;
  for (int i = 0; i < 2; ++i) {
    rhs.block<9, 9>(9 * i, 0) = c.jac[i].dx;
    rhs.block<9, 3>(9 * i, 9) = c.jac[i].du;
    rhs.block<9, 3>(9 * i, 12) = c.jac[i].df;
  }
  const Eigen::Matrix<double, 18, 15> dk = c.newton_matrix.partialPivLu().solve(rhs);
  const Eigen::Matrix<double, 9, 15> dcombined =
      dt * (kB[0] * dk.topRows<9>() + kB[1] * dk.bottomRows<9>());

  StepResult out;
  out.x_next = combine(x, c.k, dt);
  out.dx = Matrix9::Identity() + dcombined.leftCols<9>();
  out.du = dcombined.middleCols<3>(9);
  out.df = dcombined.rightCols<3>();
  out.newton_iterations = c.iterations;
  return out;
}

Vector9 integrate_state(const Vector9& x, const Vector3& input, double psi_rate_cmd,
                        const Vector3& f_ext, double dt, const ModelParams& params,
                        IntegratorOptions options) {
  const Collocation c = solve_stages(x, input, psi_rate_cmd, f_ext, dt, params, options);
  return combine(x, c.k, dt);
}

Vector9 rk4_step(const Vector9& x, const Vector3& input, double psi_rate_cmd,
                 const Vector3& f_ext, double dt, const ModelParams& params) {
  const Vector9 k1 = dynamics(x, input, psi_rate_cmd, f_ext, params);
  const Vector9 k2 = dynamics(x + 0.5 * dt * k1, input, psi_rate_cmd, f_ext, params);
  const Vector9 k3 = dynamics(x + 0.5 * dt * k2, input, psi_rate_cmd, f_ext, params);
  const Vector9 k4 = dynamics(x + dt * k3, input, psi_rate_cmd, f_ext, params);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace mavmpc
