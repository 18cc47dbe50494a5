#include "mavmpc/errors.hpp"
#include "mavmpc/reference.hpp"

#include <doctest.h>

#include <cmath>

using namespace mavmpc;

TEST_CASE("polynomial sampling with derivatives") {
  PolySegment s;
  s.duration = 2.0;
  s.x = {1.0, 2.0, 3.0};        // 1 + 2t + 3t^2
  s.y = {0.0, 0.0, 0.0, 1.0};   // t^3
  s.z = {5.0};
  s.yaw = {0.0, 0.5};
  const Trajectory tr({s});
  const RefSample r = tr.sample(1.5);
  CHECK(r.p.x() == doctest::Approx(1 + 3 + 6.75));
  CHECK(r.v.x() == doctest::Approx(2 + 9));
  CHECK(r.a.x() == doctest::Approx(6));
  CHECK(r.p.y() == doctest::Approx(3.375));
  CHECK(r.v.y() == doctest::Approx(6.75));
  CHECK(r.a.y() == doctest::Approx(9));
  CHECK(r.p.z() == doctest::Approx(5));
  CHECK(r.yaw == doctest::Approx(0.75));
  CHECK(r.yaw_rate == doctest::Approx(0.5));
}

TEST_CASE("endpoint clamping holds the final pose at rest") {
  PolySegment s;
  s.duration = 1.0;
  s.x = {0.0, 1.0};
  s.y = {0.0};
  s.z = {1.0};
  s.yaw = {0.2, 0.1};
  const Trajectory tr({s});
  const RefSample end = tr.sample(5.0);
  CHECK(end.p.x() == doctest::Approx(1.0));
  CHECK(end.v.norm() == 0.0);
  CHECK(end.a.norm() == 0.0);
  CHECK(end.yaw == doctest::Approx(0.3));
  CHECK(end.yaw_rate == 0.0);
  const RefSample before = tr.sample(-1.0);
  CHECK(before.p.x() == doctest::Approx(0.0));
}

TEST_CASE("trajectory validation") {
  CHECK_THROWS_AS(Trajectory({}), InvalidInput);
  PolySegment s;
  s.duration = 0.0;
  s.x = s.y = s.z = {0.0};
  CHECK_THROWS_AS(Trajectory({s}), InvalidInput);
  s.duration = 1.0;
  s.x.assign(13, 0.0);
  CHECK_THROWS_AS(Trajectory({s}), InvalidInput);
  s.x.assign(12, 0.0);
  CHECK_NOTHROW(Trajectory({s}));
}

TEST_CASE("figure eight: derivatives match finite differences") {
  const Trajectory tr = Trajectory::figure_eight(Vector3(0, 0, 1));
  const double h = 1e-5;
  for (double t : {0.7, 3.1, 7.9, 8.2, 12.5, 15.3}) {
    const RefSample a = tr.sample(t - h), b = tr.sample(t + h), m = tr.sample(t);
    CHECK(((b.p - a.p) / (2 * h) - m.v).norm() < 1e-6);
    CHECK(((b.v - a.v) / (2 * h) - m.a).norm() < 1e-6);
  }
}

TEST_CASE("figure eight: rest to rest, continuous, sized as intended") {
  const Trajectory tr = Trajectory::figure_eight(Vector3(0, 0, 1));
  CHECK(tr.segments().size() == 2);
  const RefSample s0 = tr.sample(0.0), s1 = tr.sample(tr.duration());
  CHECK(s0.v.norm() < 1e-9);
  CHECK(s0.a.norm() < 1e-9);
  CHECK(s1.v.norm() < 1e-9);
  CHECK((s0.p - Vector3(0, 0, 1)).norm() < 1e-9);
  const double mid = 0.5 * tr.duration();
  const RefSample l = tr.sample(mid - 1e-9), r = tr.sample(mid + 1e-9);
  CHECK((l.p - r.p).norm() < 1e-7);
  CHECK((l.v - r.v).norm() < 1e-6);
  CHECK((l.a - r.a).norm() < 1e-5);

  double vmax = 0, amax = 0, xmax = 0, ymax = 0;
  for (double t = 0; t <= tr.duration(); t += 0.005) {
    const RefSample s = tr.sample(t);
    vmax = std::max(vmax, s.v.norm());
    amax = std::max(amax, s.a.norm());
    xmax = std::max(xmax, std::abs(s.p.x()));
    ymax = std::max(ymax, std::abs(s.p.y()));
  }
  CHECK(vmax == doctest::Approx(4.0).epsilon(0.05));
  CHECK(amax / 9.81 == doctest::Approx(0.5).epsilon(0.1));
  CHECK(xmax == doctest::Approx(3.0).epsilon(0.02));
  CHECK(ymax == doctest::Approx(2.25).epsilon(0.02));
}

TEST_CASE("feed-forward substitution") {
  const Vector3 ff = build_feedforward(Vector3(1.0, 2.0, -0.5), 9.81);
  CHECK(ff(0) == doctest::Approx(-2.0 / 9.81));
  CHECK(ff(1) == doctest::Approx(1.0 / 9.81));
  CHECK(ff(2) == doctest::Approx(-0.5));
}

TEST_CASE("reference window: per-node feed-forward and heading rotation") {
  const Trajectory tr = Trajectory::figure_eight(Vector3(0, 0, 1));
  const ReferenceWindow w = window(tr, 2.0, 20, 0.1, 0.0, 9.81);
  REQUIRE(w.x_ref.size() == 21);
  REQUIRE(w.u_ref.size() == 20);
  for (int k = 0; k < 20; ++k) {
    const RefSample s = tr.sample(2.0 + 0.1 * k);
    CHECK((w.x_ref[k].head<3>() - s.p).norm() < 1e-12);
    CHECK((w.x_ref[k].segment<3>(3) - s.v).norm() < 1e-12);
    CHECK(w.x_ref[k].tail<2>().norm() == 0.0);
    CHECK((w.u_ref[k] - build_feedforward(s.a, 9.81)).norm() < 1e-12);
  }
  const ReferenceWindow r = window(tr, 2.0, 5, 0.1, std::numbers::pi / 2, 9.81);
  const Vector3 a = r.samples[0].a;
  CHECK(r.u_ref[0](0) == doctest::Approx(a.x() / 9.81));
  CHECK(r.u_ref[0](1) == doctest::Approx(a.y() / 9.81));
  CHECK_THROWS_AS(window(tr, 0.0, 0, 0.1, 0.0, 9.81), InvalidInput);
}

TEST_CASE("reference window is translation consistent under grid shifts") {
  const Trajectory tr = Trajectory::figure_eight(Vector3(0, 0, 1));
  const ReferenceWindow a = window(tr, 1.0, 20, 0.1, 0.0, 9.81);
  const ReferenceWindow b = window(tr, 1.0 + 0.1, 20, 0.1, 0.0, 9.81);
  for (int k = 0; k < 19; ++k) {
    CHECK((a.x_ref[k + 1] - b.x_ref[k]).norm() < 1e-12);
    CHECK((a.u_ref[k + 1] - b.u_ref[k]).norm() < 1e-12);
  }
}
