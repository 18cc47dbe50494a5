#include "mavmpc/errors.hpp"
#include "mavmpc/lmpc.hpp"
#include "mavmpc/simulator.hpp"
#include "mavmpc/integrator.hpp"

#include <doctest.h>

#include <sstream>

using namespace mavmpc;

namespace {

ScenarioConfig hover_config() {
  ScenarioConfig c;
  c.name = "hover";
  c.duration = 4.0;
  return c;
}

std::string csv_of(const SimLog& log) {
  std::ostringstream os;
  write_log_csv(log, os);
  return os.str();
}

}  // namespace

TEST_CASE("wind profiles") {
  WindProfile w;
  CHECK(inject_wind(w, 1.0).newtons.norm() == 0.0);
  w.mode = WindMode::Constant;
  w.force = Vector3(3, 0, 0);
  CHECK(inject_wind(w, 0.0).newtons == Vector3(3, 0, 0));
  CHECK(inject_wind(w, 7.5).newtons == Vector3(3, 0, 0));
  w.speed = Vector3(11, 0, 0);
  CHECK(inject_wind(w, 0.0).newtons.x() == doctest::Approx(3.3));

  w.mode = WindMode::Gusty;
  w.seed = 42;
  WindProfile w2 = w;
  Vector3 sum = Vector3::Zero(), sq = Vector3::Zero();
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const Vector3 a = inject_wind(w, 0.01 * i).newtons;
    CHECK(a == inject_wind(w2, 0.01 * i).newtons);
    sum += a;
    sq += (a - w.mean_force()).cwiseAbs2();
  }
  CHECK((sum / n - w.mean_force()).norm() < 0.1);
  CHECK(std::sqrt(sq.x() / n) == doctest::Approx(w.gust_std).epsilon(0.2));
  w2.seed = 43;
  CHECK(inject_wind(w, 1.234).newtons != inject_wind(w2, 1.234).newtons);
}

TEST_CASE("noiseless hover stays at the equilibrium") {
  for (ControllerKind k : {ControllerKind::Lmpc, ControllerKind::Nmpc}) {
    const SimLog log = run_scenario(hover_config(), k);
    REQUIRE(log.rows.size() == 400);
    CHECK_FALSE(log.aborted);
    for (const auto& r : log.rows) {
      CHECK((r.truth.head<3>() - r.reference.p).norm() <= 1e-6);
      CHECK_FALSE(r.fault);
    }
  }
}

TEST_CASE("timestamps and tick contract") {
  const SimLog log = run_scenario(hover_config(), ControllerKind::Lmpc);
  for (std::size_t i = 0; i < log.rows.size(); ++i)
    CHECK(log.rows[i].t == doctest::Approx(0.01 * static_cast<double>(i)).epsilon(1e-12));
}

TEST_CASE("runs are bit-identical for the same seed") {
  ScenarioConfig c = default_suite()[1];  // gusty wind with measurement noise
  c.duration = 3.0;
  for (ControllerKind k : {ControllerKind::Lmpc, ControllerKind::Nmpc}) {
    const std::string a = csv_of(run_scenario(c, k));
    const std::string b = csv_of(run_scenario(c, k));
    CHECK(a == b);
    ScenarioConfig other = c;
    other.seed = c.seed + 1;
    CHECK(csv_of(run_scenario(other, k)) != a);
  }
}

TEST_CASE("CSV log round trip") {
  ScenarioConfig c = hover_config();
  c.measurement_noise = true;
  c.duration = 0.5;
  const SimLog log = run_scenario(c, ControllerKind::Nmpc);
  std::istringstream in(csv_of(log));
  const SimLog back = read_log_csv(in);
  REQUIRE(back.rows.size() == log.rows.size());
  CHECK(back.scenario == log.scenario);
  CHECK(back.controller == "nmpc");
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    CHECK(back.rows[i].truth == log.rows[i].truth);
    CHECK(back.rows[i].measured == log.rows[i].measured);
    CHECK(back.rows[i].command.thrust_cmd == log.rows[i].command.thrust_cmd);
    CHECK(back.rows[i].qp_iterations == log.rows[i].qp_iterations);
  }
  CHECK(csv_of(back) == csv_of(log));

  std::ostringstream timing;
  write_timing_csv(log, timing);
  SimLog with_timing = back;
  std::istringstream tin(timing.str());
  read_timing_csv(tin, with_timing);
  CHECK(with_timing.rows[3].solve_time_s == doctest::Approx(log.rows[3].solve_time_s));

  std::istringstream broken("# {}\nt,x\n");
  CHECK_THROWS_AS(read_log_csv(broken), InvalidInput);
}

TEST_CASE("without an estimator the LMPC offset matches the force balance") {
  ModelParams p;
  const Vector3 force(3.0, 0.0, 0.0);
  ScenarioConfig c = hover_config();
  c.duration = 15.0;
  c.estimator = EstimatorMode::None;
  c.wind.mode = WindMode::Constant;
  c.wind.force = force;
  const SimLog log = run_scenario(c, ControllerKind::Lmpc);
  const double sim_offset = log.rows.back().truth(0) - log.rows.back().reference.p.x();

  // Steady state: the pitch that cancels the force, and the position error for
  // which the unconstrained LMPC law commands exactly that pitch (affine in e).
  const double theta = std::atan(-force.x() / (p.mass * p.g));
  auto command_at = [&](double e) {
    LinearMpc mpc(p, OcpConfig{});
    MavState x;
    x.p = Vector3(e, 0, 1);
    x.theta = theta;
    return mpc.step(x, {}, Trajectory::hover(Vector3(0, 0, 1)), 0.0).command.theta_cmd;
  };
  const double c0 = command_at(0.0), c1 = command_at(0.1);
  const double e = (theta / p.k_theta - c0) / ((c1 - c0) / 0.1);
  CHECK(std::abs(e) > 0.01);
  CHECK(sim_offset == doctest::Approx(e).epsilon(0.05));
}

TEST_CASE("pitch beyond pi/2 aborts the run") {
  ScenarioConfig c = hover_config();
  c.duration = 3.0;
  c.vehicle.k_theta = 1.2;
  c.vehicle.roll_max_deg = 89.0;
  c.vehicle.roll_min_deg = -89.0;
  c.vehicle.pitch_max_deg = 89.0;
  c.vehicle.pitch_min_deg = -89.0;
  c.wind.mode = WindMode::Constant;
  c.wind.force = Vector3(200.0, 0.0, 0.0);
  const SimLog log = run_scenario(c, ControllerKind::Lmpc);
  CHECK(log.aborted);
  CHECK(log.abort_reason.find("pi/2") != std::string::npos);
}

TEST_CASE("run_scenario rejects Both") {
  CHECK_THROWS_AS(run_scenario(hover_config(), ControllerKind::Both), InvalidInput);
  CHECK(run_scenario_all(hover_config()).size() == 2);
}

TEST_CASE("steady force: LMPC holds a pitch offset against it and converges") {
  ModelParams p;
  ScenarioConfig c = hover_config();
  c.duration = 10.0;
  c.wind.mode = WindMode::Constant;
  c.wind.force = Vector3(3.0, 0.0, 0.0);
  const SimLog log = run_scenario(c, ControllerKind::Lmpc);
  const SimLogRow& last = log.rows.back();
  const double expected = std::atan(-3.0 / (p.mass * p.g)) / p.k_theta;
  CHECK(last.command.theta_cmd == doctest::Approx(expected).epsilon(0.02));
  CHECK((last.truth.head<3>() - last.reference.p).norm() < 0.01);
}

TEST_CASE("steady force: NMPC tilts into it with thrust above g") {
  ModelParams p;
  ScenarioConfig c = hover_config();
  c.duration = 8.0;
  c.wind.mode = WindMode::Constant;
  c.wind.force = Vector3(3.0, -1.0, 0.0);
  const SimLog log = run_scenario(c, ControllerKind::Nmpc);
  const SimLogRow& last = log.rows.back();
  CHECK(last.command.theta_cmd < 0.0);
  CHECK(last.command.phi_cmd < 0.0);
  CHECK(last.command.thrust_cmd > p.g);
  const double tilt_acc = p.g * std::hypot(std::tan(last.truth(7)), std::tan(last.truth(6)));
  CHECK(tilt_acc * p.mass == doctest::Approx(std::hypot(3.0, 1.0)).epsilon(0.02));
}

TEST_CASE("EKF in the loop finds a 1 N force within 3 s") {
  ScenarioConfig c = hover_config();
  c.duration = 5.0;
  c.wind.mode = WindMode::Constant;
  c.wind.force = Vector3(1.0, 0.0, 0.0);
  for (ControllerKind k : {ControllerKind::Lmpc, ControllerKind::Nmpc}) {
    const SimLog log = run_scenario(c, k);
    for (const auto& r : log.rows)
      if (r.t >= 3.0) CHECK(std::abs(r.force_estimate.x() - 1.0) <= 0.05);
  }
}

TEST_CASE("EKF is unbiased at equilibrium") {
  const SimLog log = run_scenario(hover_config(), ControllerKind::Nmpc);
  for (const auto& r : log.rows) CHECK(r.force_estimate.norm() <= 1e-9);
}

TEST_CASE("plant dissipates horizontal kinetic energy at hover thrust") {
  ModelParams p;
  Vector9 x = Vector9::Zero();
  x.segment<3>(3) = Vector3(2.0, -1.5, 0.0);
  const Vector3 hover(0.0, 0.0, p.g);
  double energy = x.segment<2>(3).squaredNorm();
  for (int i = 0; i < 5000; ++i) {
    x = rk4_step(x, hover, 0.0, Vector3::Zero(), 0.001, p);
    const double e = x.segment<2>(3).squaredNorm();
    CHECK(e <= energy);
    energy = e;
  }
  CHECK(energy < 2.0 * 2.0 + 1.5 * 1.5);
}
