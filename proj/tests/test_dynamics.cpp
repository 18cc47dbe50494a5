#include "mavmpc/dynamics.hpp"
#include "mavmpc/errors.hpp"

#include <Eigen/Geometry>
#include <doctest.h>

#include <random>

using namespace mavmpc;

namespace {

Vector9 random_near_hover(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector9 x;
  x << u(rng), u(rng), 1.0 + u(rng), 0.5 * u(rng), 0.5 * u(rng), 0.5 * u(rng), 0.2 * u(rng),
      0.2 * u(rng), u(rng);
  return x;
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("rotation matrix is orthonormal and composes Z-Y-X") {
  const Matrix3 R = rotation_zyx(0.1, -0.2, 0.7);
  CHECK((R * R.transpose() - Matrix3::Identity()).norm() < 1e-14);
  CHECK(R.determinant() == doctest::Approx(1.0));
  const Matrix3 expected = Eigen::AngleAxisd(0.7, Vector3::UnitZ()).toRotationMatrix() *
                           Eigen::AngleAxisd(-0.2, Vector3::UnitY()).toRotationMatrix() *
                           Eigen::AngleAxisd(0.1, Vector3::UnitX()).toRotationMatrix();
  CHECK((R - expected).norm() < 1e-14);
}

TEST_CASE("hover is an equilibrium") {
  ModelParams p;
  MavState x;
  x.p = Vector3(1, 2, 3);
  x.psi = 0.4;
  AttitudeThrustCommand u{0.0, 0.0, 0.0, p.g};
  CHECK(eval_dynamics(x, u, {}, p).norm() < 1e-15);
}

TEST_CASE("level flight decelerates through rotor drag") {
  ModelParams p;
  MavState x;
  x.v = Vector3(2.0, -1.0, 0.0);
  const Vector9 xd = eval_dynamics(x, {0.0, 0.0, 0.0, p.g}, {}, p);
  CHECK(xd(3) == doctest::Approx(-p.g * p.k_drag * 2.0));
  CHECK(xd(4) == doctest::Approx(p.g * p.k_drag * 1.0));
  CHECK(xd(5) == doctest::Approx(0.0));
}

TEST_CASE("attitude channel is first order with gain") {
  ModelParams p;
  MavState x;
  x.phi = 0.1;
  const Vector9 xd = eval_dynamics(x, {0.2, -0.1, 0.3, p.g}, {}, p);
  CHECK(xd(6) == doctest::Approx((p.k_phi * 0.2 - 0.1) / p.tau_phi));
  CHECK(xd(7) == doctest::Approx((p.k_theta * -0.1) / p.tau_theta));
  CHECK(xd(8) == doctest::Approx(0.3));
}

TEST_CASE("external force enters as acceleration") {
  ModelParams p;
  MavState x;
  const Vector9 xd = eval_dynamics(x, {0.0, 0.0, 0.0, p.g}, {Vector3(3.0, 0.0, -1.0)}, p);
  CHECK(xd(3) == doctest::Approx(3.0 / p.mass));
  CHECK(xd(5) == doctest::Approx(-1.0 / p.mass));
}

TEST_CASE("eval_dynamics rejects bad input") {
  ModelParams p;
  MavState x;
  CHECK_THROWS_AS(eval_dynamics(x, {0.0, 0.0, 0.0, -1.0}, {}, p), InvalidInput);
  x.v(0) = std::nan("");
  CHECK_THROWS_AS(eval_dynamics(x, {0.0, 0.0, 0.0, p.g}, {}, p), InvalidInput);
}

TEST_CASE("analytic Jacobians match central differences") {
  ModelParams p;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector9 x = random_near_hover(rng);
    const Vector3 in(u(rng), u(rng), p.g + 3 * u(rng));
    const Vector3 f(u(rng), u(rng), u(rng));
    const DynamicsJacobian J = dynamics_jacobian(x, in, f, p);
    const double h = 1e-6;
    Matrix9 dx;
    Matrix93 du, df;
    for (int i = 0; i < 9; ++i) {
      Vector9 e = Vector9::Zero();
      e(i) = h;
      dx.col(i) = (dynamics(x + e, in, 0.1, f, p) - dynamics(x - e, in, 0.1, f, p)) / (2 * h);
    }
    for (int i = 0; i < 3; ++i) {
      Vector3 e = Vector3::Zero();
      e(i) = h;
      du.col(i) = (dynamics(x, in + e, 0.1, f, p) - dynamics(x, in - e, 0.1, f, p)) / (2 * h);
      df.col(i) = (dynamics(x, in, 0.1, f + e, p) - dynamics(x, in, 0.1, f - e, p)) / (2 * h);
    }
    CHECK(rel_err(J.dx, dx) < 1e-7);
    CHECK(rel_err(J.du, du) < 1e-7);
    CHECK(rel_err(J.df, df) < 1e-7);
  }
}

TEST_CASE("hover linearization structure") {
  ModelParams p;
  const ContinuousLinearModel m = linearize_hover(p);
  CHECK(m.A(0, 3) == 1.0);
  CHECK(m.A(3, 3) == doctest::Approx(-p.g * p.k_drag));
  CHECK(m.A(5, 5) == doctest::Approx(0.0));
  CHECK(m.A(3, 7) == doctest::Approx(p.g));   // pitch drives +x
  CHECK(m.A(4, 6) == doctest::Approx(-p.g));  // roll drives -y
  CHECK(m.A(6, 6) == doctest::Approx(-1.0 / p.tau_phi));
  CHECK(m.B(6, 0) == doctest::Approx(p.k_phi / p.tau_phi));
  CHECK(m.B(7, 1) == doctest::Approx(p.k_theta / p.tau_theta));
  CHECK(m.B(5, 2) == doctest::Approx(1.0));
  CHECK(m.Bd(3, 0) == doctest::Approx(1.0 / p.mass));
}

TEST_CASE("ZOH of a double integrator is closed form") {
  ContinuousLinearModel c;
  c.A.setZero();
  c.B.setZero();
  c.Bd.setZero();
  c.A(0, 3) = 1.0;
  c.B(3, 0) = 1.0;
  const LinearModel d = discretize_zoh(c, 0.1);
  CHECK(d.A(0, 0) == doctest::Approx(1.0));
  CHECK(d.A(0, 3) == doctest::Approx(0.1));
  CHECK(d.A(3, 3) == doctest::Approx(1.0));
  CHECK(d.B(0, 0) == doctest::Approx(0.005));
  CHECK(d.B(3, 0) == doctest::Approx(0.1));
  CHECK_THROWS_AS(discretize_zoh(c, 0.0), InvalidInput);
}

TEST_CASE("ZOH matches fine RK4 of the continuous model") {
  ModelParams p;
  const ContinuousLinearModel c = linearize_hover(p);
  const LinearModel d = discretize_zoh(c, 0.1);
  Vector8 x;
  x << 0.1, -0.2, 0.3, 0.5, -0.4, 0.2, 0.05, -0.03;
  const Vector3 u(0.1, -0.05, 0.7), f(1.0, -2.0, 0.5);
  Vector8 y = x;
  const int n = 1000;
  const double h = 0.1 / n;
  auto rhs = [&](const Vector8& s) -> Vector8 { return c.A * s + c.B * u + c.Bd * f; };
  for (int i = 0; i < n; ++i) {
    const Vector8 k1 = rhs(y), k2 = rhs(y + 0.5 * h * k1), k3 = rhs(y + 0.5 * h * k2),
                  k4 = rhs(y + h * k3);
    y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  CHECK((d.A * x + d.B * u + d.Bd * f - y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("heading rotation of attitude commands") {
  const AttitudePair a = rotate_cmd_to_body(0.1, 0.2, 0.0);
  CHECK(a.phi == doctest::Approx(0.1));
  CHECK(a.theta == doctest::Approx(0.2));
  const AttitudePair b = rotate_cmd_to_body(0.1, 0.2, std::numbers::pi / 2);
  CHECK(b.phi == doctest::Approx(0.2));
  CHECK(b.theta == doctest::Approx(-0.1));
  const AttitudePair back = rotate_body_to_heading_free(b.phi, b.theta, std::numbers::pi / 2);
  CHECK(back.phi == doctest::Approx(0.1));
  CHECK(back.theta == doctest::Approx(0.2));
}

TEST_CASE("thrust compensation") {
  ModelParams p;
  CHECK(compensate_thrust(0.0, 0.0, 0.0, p) == doctest::Approx(p.g));
  CHECK(compensate_thrust(0.5, 0.2, -0.1, p) ==
        doctest::Approx((0.5 + p.g) / (std::cos(0.2) * std::cos(0.1))));
  CHECK(compensate_thrust(100.0, 0.0, 0.0, p) == doctest::Approx(p.limits.thrust_max));
  CHECK(compensate_thrust(-100.0, 0.0, 0.0, p) == doctest::Approx(p.limits.thrust_min));
  CHECK_THROWS_AS(compensate_thrust(0.0, std::numbers::pi / 2, 0.0, p), InvalidInput);
}

TEST_CASE("parameter validation") {
  ModelParams p;
  CHECK(p.limits.thrust_min == doctest::Approx(13.5 / 3.42));
  CHECK(p.limits.thrust_max == doctest::Approx(40.3 / 3.42));
  p.tau_phi = 0.0;
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  InputLimits lim;
  lim.phi_min = 1.0;
  lim.phi_max = -1.0;
  CHECK_THROWS_AS(lim.validate(), InvalidInput);
}

TEST_CASE("heading-free commands give the same acceleration at any heading") {
  ModelParams p;
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double psi = 3.0 * u(rng);
    const double phi_i = 1e-6 * u(rng), theta_i = 1e-6 * u(rng);
    const AttitudePair body = rotate_cmd_to_body(phi_i, theta_i, psi);
    MavState rotated;
    rotated.phi = body.phi;
    rotated.theta = body.theta;
    rotated.psi = psi;
    MavState level;
    level.phi = phi_i;
    level.theta = theta_i;
    const AttitudeThrustCommand hover{0.0, 0.0, 0.0, p.g};
    const Vector3 a = eval_dynamics(rotated, hover, {}, p).segment<3>(3);
    const Vector3 b = eval_dynamics(level, hover, {}, p).segment<3>(3);
    CHECK((a - b).norm() <= 1e-10);
  }
}

TEST_CASE("rotor drag never adds speed") {
  ModelParams p, no_drag;
  no_drag.k_drag = 0.0;
  std::mt19937 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    Vector9 x = random_near_hover(rng);
    const Vector3 in(0.0, 0.0, p.g + 0.5 * x(2));
    const Vector3 drag = (dynamics(x, in, 0.0, Vector3::Zero(), p) -
                          dynamics(x, in, 0.0, Vector3::Zero(), no_drag)).segment<3>(3);
    CHECK(x.segment<3>(3).dot(drag) <= 1e-15);
    // Level attitude: the drag is purely horizontal and opposes the horizontal velocity.
    x(6) = x(7) = 0.0;
    const Vector3 level = (dynamics(x, in, 0.0, Vector3::Zero(), p) -
                           dynamics(x, in, 0.0, Vector3::Zero(), no_drag)).segment<3>(3);
    CHECK(x.segment<2>(3).dot(level.head<2>()) <= 0.0);
    CHECK(level.z() == 0.0);
  }
}

TEST_CASE("thrust compensation at 30 degrees pitch") {
  ModelParams p;
  CHECK(compensate_thrust(0.0, 0.0, std::numbers::pi / 6, p) == doctest::Approx(11.328).epsilon(1e-4));
}
