#include "mavmpc/simulator.hpp"

#include "mavmpc/errors.hpp"
#include "mavmpc/integrator.hpp"
#include "mavmpc/lmpc.hpp"
#include "mavmpc/nmpc.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace mavmpc {
namespace {

// Uniform in [0, 1) from the top 53 bits; portable across standard libraries,
// unlike std::uniform_real_distribution.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit_uniform(rng);  // (0, 1]
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw InvalidInput("cannot format value");
  return std::string(buf.data(), ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw InvalidInput("log csv: bad number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

ModelParams plant_params(const ScenarioConfig& config) {
  ModelParams p = config.vehicle.params();
  p.mass *= config.mismatch.mass_scale;
  p.k_drag *= config.mismatch.drag_scale;
  p.tau_phi *= config.mismatch.tau_scale;
  p.tau_theta *= config.mismatch.tau_scale;
  return p;
}

Vector3 target_of(const TrajectorySpec& spec, const Trajectory& traj) {
  if (spec.kind() == ScenarioKind::Step) return spec.position + spec.step;
  return traj.sample(traj.duration()).p;
}

}  // namespace

ExternalForce inject_wind(const WindProfile& profile, double t) {
  ExternalForce f;
  if (profile.mode == WindMode::Off) return f;
  f.newtons = profile.mean_force();
  if (profile.mode == WindMode::Constant) return f;

  std::mt19937_64 rng(profile.seed);
  const int n = profile.gust_components;
  const double amp = profile.gust_std * std::sqrt(2.0 / n);
  for (int axis = 0; axis < 3; ++axis) {
    for (int k = 0; k < n; ++k) {
      const double freq = profile.gust_bandwidth_hz * (k + unit_uniform(rng)) / n;
      const double phase = 2.0 * std::numbers::pi * unit_uniform(rng);
      f.newtons(axis) += amp * std::sin(2.0 * std::numbers::pi * freq * t + phase);
    }
  }
  return f;
}

std::unique_ptr<TrackingController> make_controller(ControllerKind which,
                                                    const ScenarioConfig& config) {
  const ModelParams params = config.vehicle.params();
  switch (which) {
    case ControllerKind::Lmpc: return std::make_unique<LinearMpc>(params, config.ocp);
    case ControllerKind::Nmpc: return std::make_unique<NonlinearMpc>(params, config.ocp);
    case ControllerKind::Both: break;
  }
  throw InvalidInput("make_controller: select lmpc or nmpc");
}

SimLog run_scenario(const ScenarioConfig& config, ControllerKind which) {
  config.validate();
  if (which == ControllerKind::Both) throw InvalidInput("run_scenario: select lmpc or nmpc");

  const ModelParams nominal = config.vehicle.params();
  const ModelParams plant = plant_params(config);
  const double thrust_scale = 1.0 / config.mismatch.mass_scale;
  const Trajectory traj = config.trajectory.build();
  auto controller = make_controller(which, config);
  DisturbanceEkf ekf(nominal, config.noise);
  std::mt19937_64 rng(config.seed);

  SimLog log;
  log.scenario = config.name;
  log.controller = controller->name();
  log.kind = config.trajectory.kind();
  const MavState start = config.trajectory.initial_state();
  log.initial_position = start.p;
  log.target_position = target_of(config.trajectory, traj);

  const long ticks = std::lround(config.duration / kControlTick);
  const double h = kControlTick / kPlantSubsteps;
  Vector9 x = start.to_vector();
  AttitudeThrustCommand held;
  log.rows.reserve(static_cast<std::size_t>(ticks));

  for (long i = 0; i < ticks; ++i) {
    const double t = static_cast<double>(i) * kControlTick;
    SimLogRow row;
    row.t = t;
    row.truth = x;
    row.force_true = inject_wind(config.wind, t).newtons;

    Vector9 meas = x;
    if (config.measurement_noise) {
      const NoiseConfig& n = config.noise;
      for (int k = 0; k < 3; ++k) meas(k) += n.position_std * standard_normal(rng);
      for (int k = 3; k < 6; ++k) meas(k) += n.velocity_std * standard_normal(rng);
      for (int k = 6; k < 9; ++k) meas(k) += n.attitude_std * standard_normal(rng);
    }
    row.measured = meas;
    const MavState measured = MavState::from_vector(meas);

    MavState state = measured;
    ExternalForce f_est;
    switch (config.estimator) {
      case EstimatorMode::Ekf:
        if (ekf.initialized()) ekf.predict(held, kControlTick);
        ekf.update(measured);
        state = ekf.state().vehicle();
        f_est = ekf.force();
        break;
      case EstimatorMode::Truth:
        f_est.newtons = row.force_true;
        break;
      case EstimatorMode::None:
        break;
    }
    row.force_estimate = f_est.newtons;
    row.reference = traj.sample(t);

    const ControlOutput out = controller->step(state, f_est, traj, t);
    held = out.command;
    row.command = held;
    row.qp_iterations = out.qp_iterations;
    row.fault = out.fault;
    row.solve_time_s = out.solve_time_s;
    log.rows.push_back(row);

    Vector3 input = held.input();
    input(2) *= thrust_scale;
    for (int s = 0; s < kPlantSubsteps; ++s) {
      const double ts = t + s * h;
      x = rk4_step(x, input, held.psi_rate_cmd, inject_wind(config.wind, ts).newtons, h, plant);
    }
    if (!x.allFinite()) {
      log.aborted = true;
      log.abort_reason = "non-finite plant state after t=" + format_double(t);
      break;
    }
    if (std::abs(x(6)) >= std::numbers::pi / 2 || std::abs(x(7)) >= std::numbers::pi / 2) {
      log.aborted = true;
      log.abort_reason = "attitude reached pi/2 after t=" + format_double(t);
      break;
    }
  }
  return log;
}

std::vector<SimLog> run_scenario_all(const ScenarioConfig& config) {
  std::vector<SimLog> logs;
  if (config.controller == ControllerKind::Both) {
    logs.push_back(run_scenario(config, ControllerKind::Lmpc));
    logs.push_back(run_scenario(config, ControllerKind::Nmpc));
  } else {
    logs.push_back(run_scenario(config, config.controller));
  }
  return logs;
}

const std::vector<std::string>& log_columns() {
  static const std::vector<std::string> cols = {
      "t",         "x",         "y",         "z",          "vx",         "vy",
      "vz",        "phi",       "theta",     "psi",        "meas_x",     "meas_y",
      "meas_z",    "meas_vx",   "meas_vy",   "meas_vz",    "meas_phi",   "meas_theta",
      "meas_psi",  "ref_x",     "ref_y",     "ref_z",      "ref_vx",     "ref_vy",
      "ref_vz",    "ref_ax",    "ref_ay",    "ref_az",     "ref_yaw",    "ref_yaw_rate",
      "cmd_phi",   "cmd_theta", "cmd_psi_rate", "cmd_thrust", "fx",       "fy",
      "fz",        "fx_hat",    "fy_hat",    "fz_hat",     "qp_iterations", "fault"};
  return cols;
}

void write_log_csv(const SimLog& log, std::ostream& out) {
  nlohmann::json meta = {{"scenario", log.scenario},
                         {"controller", log.controller},
                         {"kind", to_string(log.kind)},
                         {"initial_position", {log.initial_position.x(), log.initial_position.y(),
                                               log.initial_position.z()}},
                         {"target_position", {log.target_position.x(), log.target_position.y(),
                                              log.target_position.z()}},
                         {"aborted", log.aborted},
                         {"abort_reason", log.abort_reason}};
  out << "# " << meta.dump() << '\n';
  const auto& cols = log_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';

  for (const auto& r : log.rows) {
    std::vector<double> v;
    v.reserve(cols.size());
    v.push_back(r.t);
    for (int k = 0; k < 9; ++k) v.push_back(r.truth(k));
    for (int k = 0; k < 9; ++k) v.push_back(r.measured(k));
    for (int k = 0; k < 3; ++k) v.push_back(r.reference.p(k));
    for (int k = 0; k < 3; ++k) v.push_back(r.reference.v(k));
    for (int k = 0; k < 3; ++k) v.push_back(r.reference.a(k));
    v.push_back(r.reference.yaw);
    v.push_back(r.reference.yaw_rate);
    v.push_back(r.command.phi_cmd);
    v.push_back(r.command.theta_cmd);
    v.push_back(r.command.psi_rate_cmd);
    v.push_back(r.command.thrust_cmd);
    for (int k = 0; k < 3; ++k) v.push_back(r.force_true(k));
    for (int k = 0; k < 3; ++k) v.push_back(r.force_estimate(k));
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << format_double(v[i]);
    out << ',' << r.qp_iterations << ',' << (r.fault ? 1 : 0) << '\n';
  }
}

void write_timing_csv(const SimLog& log, std::ostream& out) {
  out << "t,solve_time_ms\n";
  for (const auto& r : log.rows)
    out << format_double(r.t) << ',' << format_double(r.solve_time_s * 1e3) << '\n';
}

SimLog read_log_csv(std::istream& in) {
  SimLog log;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw InvalidInput("log csv: missing metadata line");
  try {
    const auto meta = nlohmann::json::parse(line.substr(2));
    log.scenario = meta.at("scenario").get<std::string>();
    log.controller = meta.at("controller").get<std::string>();
    log.kind = scenario_kind_from_string(meta.at("kind").get<std::string>());
    const auto ip = meta.at("initial_position").get<std::vector<double>>();
    const auto tp = meta.at("target_position").get<std::vector<double>>();
    if (ip.size() != 3 || tp.size() != 3) throw InvalidInput("log csv: bad positions");
    log.initial_position = Vector3(ip[0], ip[1], ip[2]);
    log.target_position = Vector3(tp[0], tp[1], tp[2]);
    log.aborted = meta.at("aborted").get<bool>();
    log.abort_reason = meta.at("abort_reason").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("log csv: bad metadata: ") + e.what());
  }

  const auto& cols = log_columns();
  if (!std::getline(in, line) || split(line, ',') != cols)
    throw InvalidInput("log csv: header does not match the expected columns");

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != cols.size()) throw InvalidInput("log csv: wrong field count");
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) v[i] = parse_double(f[i]);
    SimLogRow r;
    std::size_t c = 0;
    r.t = v[c++];
    for (int k = 0; k < 9; ++k) r.truth(k) = v[c++];
    for (int k = 0; k < 9; ++k) r.measured(k) = v[c++];
    for (int k = 0; k < 3; ++k) r.reference.p(k) = v[c++];
    for (int k = 0; k < 3; ++k) r.reference.v(k) = v[c++];
    for (int k = 0; k < 3; ++k) r.reference.a(k) = v[c++];
    r.reference.yaw = v[c++];
    r.reference.yaw_rate = v[c++];
    r.command.phi_cmd = v[c++];
    r.command.theta_cmd = v[c++];
    r.command.psi_rate_cmd = v[c++];
    r.command.thrust_cmd = v[c++];
    for (int k = 0; k < 3; ++k) r.force_true(k) = v[c++];
    for (int k = 0; k < 3; ++k) r.force_estimate(k) = v[c++];
    r.qp_iterations = static_cast<int>(v[c++]);
    r.fault = v[c++] != 0.0;
    if (!log.rows.empty() && !(r.t > log.rows.back().t))
      throw InvalidInput("log csv: timestamps must be strictly increasing");
    log.rows.push_back(r);
  }
  return log;
}

void read_timing_csv(std::istream& in, SimLog& log) {
  std::string line;
  if (!std::getline(in, line) || line != "t,solve_time_ms")
    throw InvalidInput("timing csv: bad header");
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 2 || i >= log.rows.size() || parse_double(f[0]) != log.rows[i].t)
      throw InvalidInput("timing csv: rows do not match the log");
    log.rows[i++].solve_time_s = parse_double(f[1]) * 1e-3;
  }
  if (i != log.rows.size()) throw InvalidInput("timing csv: rows do not match the log");
}

}  // namespace mavmpc
