#include "mavmpc/errors.hpp"
#include "mavmpc/integrator.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mavmpc;

namespace {

double phi_exact(const ModelParams& p, double phi0, double cmd, double t) {
  const double ss = p.k_phi * cmd;
  return ss + (phi0 - ss) * std::exp(-t / p.tau_phi);
}

double attitude_global_error(const ModelParams& p, int steps) {
  Vector9 x = Vector9::Zero();
  x(6) = 0.2;
  const Vector3 u(-0.3, 0.0, p.g);
  const double h = 1.0 / steps;
  for (int i = 0; i < steps; ++i) x = integrate_state(x, u, 0.0, Vector3::Zero(), h, p);
  return std::abs(x(6) - phi_exact(p, 0.2, -0.3, 1.0));
}

}  // namespace

TEST_CASE("implicit step reproduces the attitude closed form") {
  ModelParams p;
  Vector9 x = Vector9::Zero();
  x(6) = 0.1;
  const StepResult r = integrate_step(x, Vector3(0.3, 0.0, p.g), 0.0, Vector3::Zero(), 0.01, p);
  CHECK(r.x_next(6) == doctest::Approx(phi_exact(p, 0.1, 0.3, 0.01)).epsilon(1e-8));
  // On a linear channel the two-stage Gauss method is the (2,2) Pade approximant of exp.
  const double z = -0.01 / p.tau_phi;
  const double pade = (1 + z / 2 + z * z / 12) / (1 - z / 2 + z * z / 12);
  const double ss = p.k_phi * 0.3;
  CHECK(r.x_next(6) == doctest::Approx(ss + (0.1 - ss) * pade).epsilon(1e-12));
  CHECK(r.newton_iterations >= 1);
}

TEST_CASE("implicit step is fourth order") {
  ModelParams p;
  double prev = attitude_global_error(p, 10);
  for (int n : {20, 40, 80}) {
    const double err = attitude_global_error(p, n);
    const double ratio = prev / err;
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
    prev = err;
  }
}

TEST_CASE("level drift matches the drag closed form") {
  ModelParams p;
  Vector9 x = Vector9::Zero();
  x(3) = 2.0;
  const double a = p.g * p.k_drag;
  for (int i = 0; i < 10; ++i) x = integrate_state(x, Vector3(0, 0, p.g), 0.0, Vector3::Zero(), 0.1, p);
  CHECK(x(3) == doctest::Approx(2.0 * std::exp(-a)).epsilon(1e-10));
  CHECK(x(0) == doctest::Approx(2.0 * (1 - std::exp(-a)) / a).epsilon(1e-10));
}

TEST_CASE("heading integrates the rate command") {
  ModelParams p;
  const Vector9 x = integrate_state(Vector9::Zero(), Vector3(0, 0, p.g), 0.5, Vector3::Zero(), 0.1, p);
  CHECK(x(8) == doctest::Approx(0.05));
}

TEST_CASE("step sensitivities match central differences") {
  ModelParams p;
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vector9 x;
    x << u(rng), u(rng), 1 + u(rng), u(rng), u(rng), 0.3 * u(rng), 0.2 * u(rng), 0.2 * u(rng),
        u(rng);
    const Vector3 in(0.3 * u(rng), 0.3 * u(rng), p.g + 2 * u(rng));
    const Vector3 f(u(rng), u(rng), u(rng));
    const StepResult r = integrate_step(x, in, 0.2, f, 0.1, p);
    const double h = 1e-6;
    for (int i = 0; i < 9; ++i) {
      Vector9 e = Vector9::Zero();
      e(i) = h;
      const Vector9 fd = (integrate_state(x + e, in, 0.2, f, 0.1, p) -
                          integrate_state(x - e, in, 0.2, f, 0.1, p)) / (2 * h);
      CHECK((r.dx.col(i) - fd).cwiseAbs().maxCoeff() < 1e-7);
    }
    for (int i = 0; i < 3; ++i) {
      Vector3 e = Vector3::Zero();
      e(i) = h;
      const Vector9 fu = (integrate_state(x, in + e, 0.2, f, 0.1, p) -
                          integrate_state(x, in - e, 0.2, f, 0.1, p)) / (2 * h);
      const Vector9 ff = (integrate_state(x, in, 0.2, f + e, 0.1, p) -
                          integrate_state(x, in, 0.2, f - e, 0.1, p)) / (2 * h);
      CHECK((r.du.col(i) - fu).cwiseAbs().maxCoeff() < 1e-7);
      CHECK((r.df.col(i) - ff).cwiseAbs().maxCoeff() < 1e-7);
    }
  }
}

TEST_CASE("explicit RK4 agrees with the implicit step at small dt") {
  ModelParams p;
  Vector9 x;
  x << 0, 0, 1, 1, -0.5, 0.2, 0.1, -0.1, 0.3;
  const Vector3 in(0.2, -0.1, 10.5), f(1.0, 0.0, -0.5);
  const Vector9 a = rk4_step(x, in, 0.1, f, 0.001, p);
  const Vector9 b = integrate_state(x, in, 0.1, f, 0.001, p);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("integrator errors") {
  ModelParams p;
  CHECK_THROWS_AS(integrate_step(Vector9::Zero(), Vector3(0, 0, p.g), 0, Vector3::Zero(), 0.0, p),
                  InvalidInput);
  Vector9 bad = Vector9::Zero();
  bad(0) = std::nan("");
  CHECK_THROWS_AS(integrate_step(bad, Vector3(0, 0, p.g), 0, Vector3::Zero(), 0.1, p), InvalidInput);
  IntegratorOptions strict{1e-300, 1};
  Vector9 x = Vector9::Zero();
  x(3) = 5.0;
  CHECK_THROWS_AS(
      integrate_step(x, Vector3(0.5, 0.5, 11.0), 0, Vector3::Zero(), 0.5, p, strict),
      IntegratorError);
}
