#include "mavmpc/scenario.hpp"

#include "mavmpc/errors.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

namespace mavmpc {

using nlohmann::json;

std::string to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::Lmpc: return "lmpc";
    case ControllerKind::Nmpc: return "nmpc";
    case ControllerKind::Both: return "both";
  }
  return "both";
}

std::string to_string(EstimatorMode m) {
  switch (m) {
    case EstimatorMode::Ekf: return "ekf";
    case EstimatorMode::None: return "none";
    case EstimatorMode::Truth: return "truth";
  }
  return "ekf";
}

std::string to_string(WindMode m) {
  switch (m) {
    case WindMode::Off: return "off";
    case WindMode::Constant: return "constant";
    case WindMode::Gusty: return "gusty";
  }
  return "off";
}

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Hover: return "hover";
    case ScenarioKind::Step: return "step";
    case ScenarioKind::Trajectory: return "trajectory";
  }
  return "hover";
}

ControllerKind controller_from_string(const std::string& s) {
  if (s == "lmpc") return ControllerKind::Lmpc;
  if (s == "nmpc") return ControllerKind::Nmpc;
  if (s == "both") return ControllerKind::Both;
  throw InvalidInput("unknown controller '" + s + "' (expected lmpc, nmpc or both)");
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "hover") return ScenarioKind::Hover;
  if (s == "step") return ScenarioKind::Step;
  if (s == "trajectory") return ScenarioKind::Trajectory;
  throw InvalidInput("unknown scenario kind '" + s + "'");
}

namespace {

EstimatorMode estimator_from_string(const std::string& s) {
  if (s == "ekf") return EstimatorMode::Ekf;
  if (s == "none") return EstimatorMode::None;
  if (s == "truth") return EstimatorMode::Truth;
  throw InvalidInput("unknown estimator '" + s + "' (expected ekf, none or truth)");
}

WindMode wind_from_string(const std::string& s) {
  if (s == "off") return WindMode::Off;
  if (s == "constant") return WindMode::Constant;
  if (s == "gusty") return WindMode::Gusty;
  throw InvalidInput("unknown wind mode '" + s + "' (expected off, constant or gusty)");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& ctx) {
  if (!j.is_object()) throw InvalidInput(ctx + ": expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!keys.count(key)) throw InvalidInput(ctx + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& ctx) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput(ctx + "." + key + ": " + e.what());
  }
}

Vector3 read_vec3(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 3) throw InvalidInput(ctx + ": expected 3 numbers");
  Vector3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw InvalidInput(ctx + ": expected 3 numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

json vec_json(const Vector3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <int N>
Eigen::Matrix<double, N, N> read_weight(const json& j, const std::string& ctx) {
  Eigen::Matrix<double, N, N> m;
  if (!j.is_array() || j.size() != N) throw InvalidInput(ctx + ": wrong dimension");
  if (j[0].is_number()) {
    Eigen::Matrix<double, N, 1> d;
    for (int i = 0; i < N; ++i) d(i) = j[i].get<double>();
    return d.asDiagonal();
  }
  for (int r = 0; r < N; ++r) {
    if (!j[r].is_array() || j[r].size() != N) throw InvalidInput(ctx + ": wrong dimension");
    for (int c = 0; c < N; ++c) {
      if (!j[r][c].is_number()) throw InvalidInput(ctx + ": expected numbers");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

template <typename Derived>
json matrix_json(const Eigen::MatrixBase<Derived>& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> read_coeffs(const json& j, const char* key, const std::string& ctx) {
  std::vector<double> c;
  read(j, key, c, ctx);
  return c;
}

}  // namespace

Vector3 WindProfile::mean_force() const {
  if (mode == WindMode::Off) return Vector3::Zero();
  if (speed) return coefficient * *speed;
  return force;
}

ModelParams VehicleSpec::params() const {
  ModelParams p;
  p.mass = mass;
  p.g = g;
  p.k_drag = k_drag;
  p.tau_phi = tau_phi;
  p.tau_theta = tau_theta;
  p.k_phi = k_phi;
  p.k_theta = k_theta;
  if (!(mass > 0.0)) throw InvalidInput("vehicle: mass must be > 0");
  p.limits.phi_min = deg_to_rad(roll_min_deg);
  p.limits.phi_max = deg_to_rad(roll_max_deg);
  p.limits.theta_min = deg_to_rad(pitch_min_deg);
  p.limits.theta_max = deg_to_rad(pitch_max_deg);
  p.limits.thrust_min = thrust_min_newton / mass;
  p.limits.thrust_max = thrust_max_newton / mass;
  p.validate();
  return p;
}

ScenarioKind TrajectorySpec::kind() const {
  if (preset == "hover") return ScenarioKind::Hover;
  if (preset == "step") return ScenarioKind::Step;
  return ScenarioKind::Trajectory;
}

Trajectory TrajectorySpec::build() const {
  if (preset == "hover") return Trajectory::hover(position, yaw);
  if (preset == "step") return Trajectory::hover(position + step, yaw);
  if (preset == "figure8")
    return Trajectory::figure_eight(position, figure8_x_amplitude, figure8_y_scale,
                                    figure8_duration);
  if (preset == "segments") return Trajectory(segments);
  throw InvalidInput("trajectory: unknown preset '" + preset + "'");
}

MavState TrajectorySpec::initial_state() const {
  MavState s;
  if (preset == "hover" || preset == "step") {
    s.p = position;
  } else {
    s.p = build().sample(0.0).p;
  }
  s.psi = build().sample(0.0).yaw;
  return s;
}

void ScenarioConfig::validate() const {
  if (schema_version != kScenarioSchemaVersion)
    throw InvalidInput("scenario: unsupported schema_version " + std::to_string(schema_version));
  if (name.empty()) throw InvalidInput("scenario: name must not be empty");
  if (!(duration > 0.0)) throw InvalidInput("scenario: duration must be > 0");
  if (!(metrics_transient >= 0.0)) throw InvalidInput("scenario: metrics_transient must be >= 0");
  (void)vehicle.params();
  ocp.validate();
  noise.validate();
  if (!(mismatch.mass_scale > 0.0) || !(mismatch.drag_scale >= 0.0) || !(mismatch.tau_scale > 0.0))
    throw InvalidInput("scenario: mismatch scales must be positive");
  if (wind.gust_components < 1 || !(wind.gust_bandwidth_hz > 0.0) || !(wind.gust_std >= 0.0))
    throw InvalidInput("scenario: invalid gust parameters");
  (void)trajectory.build();
}

ScenarioConfig parse_scenario(const json& j) {
  check_keys(j,
             {"schema_version", "name", "controller", "duration", "seed", "vehicle", "ocp",
              "noise", "measurement_noise", "estimator", "wind", "trajectory", "mismatch",
              "metrics_transient"},
             "scenario");
  if (!j.contains("schema_version")) throw InvalidInput("scenario: schema_version is required");
  ScenarioConfig c;
  const std::string ctx = "scenario";
  read(j, "schema_version", c.schema_version, ctx);
  read(j, "name", c.name, ctx);
  if (j.contains("controller")) c.controller = controller_from_string(j.at("controller").get<std::string>());
  read(j, "duration", c.duration, ctx);
  read(j, "seed", c.seed, ctx);
  read(j, "measurement_noise", c.measurement_noise, ctx);
  if (j.contains("estimator")) c.estimator = estimator_from_string(j.at("estimator").get<std::string>());
  read(j, "metrics_transient", c.metrics_transient, ctx);

  if (j.contains("vehicle")) {
    const json& v = j.at("vehicle");
    const std::string vc = "vehicle";
    check_keys(v,
               {"mass", "g", "k_drag", "tau_phi", "tau_theta", "k_phi", "k_theta", "roll_min_deg",
                "roll_max_deg", "pitch_min_deg", "pitch_max_deg", "thrust_min_newton",
                "thrust_max_newton"},
               vc);
    auto& s = c.vehicle;
    read(v, "mass", s.mass, vc);
    read(v, "g", s.g, vc);
    read(v, "k_drag", s.k_drag, vc);
    read(v, "tau_phi", s.tau_phi, vc);
    read(v, "tau_theta", s.tau_theta, vc);
    read(v, "k_phi", s.k_phi, vc);
    read(v, "k_theta", s.k_theta, vc);
    read(v, "roll_min_deg", s.roll_min_deg, vc);
    read(v, "roll_max_deg", s.roll_max_deg, vc);
    read(v, "pitch_min_deg", s.pitch_min_deg, vc);
    read(v, "pitch_max_deg", s.pitch_max_deg, vc);
    read(v, "thrust_min_newton", s.thrust_min_newton, vc);
    read(v, "thrust_max_newton", s.thrust_max_newton, vc);
  }

  if (j.contains("ocp")) {
    const json& o = j.at("ocp");
    const std::string oc = "ocp";
    check_keys(o,
               {"horizon", "dt_pred", "control_period", "state_weight", "input_weight",
                "terminal_weight", "yaw_weight", "yaw_rate_limit"},
               oc);
    read(o, "horizon", c.ocp.horizon, oc);
    read(o, "dt_pred", c.ocp.dt_pred, oc);
    read(o, "control_period", c.ocp.control_period, oc);
    if (o.contains("state_weight")) c.ocp.state_weight = read_weight<8>(o.at("state_weight"), "ocp.state_weight");
    if (o.contains("input_weight")) c.ocp.input_weight = read_weight<3>(o.at("input_weight"), "ocp.input_weight");
    if (o.contains("terminal_weight")) {
      const json& t = o.at("terminal_weight");
      if (t.is_string()) {
        if (t.get<std::string>() != "riccati")
          throw InvalidInput("ocp.terminal_weight: expected \"riccati\" or a matrix");
        c.ocp.terminal_weight.reset();
      } else {
        c.ocp.terminal_weight = read_weight<8>(t, "ocp.terminal_weight");
      }
    }
    read(o, "yaw_weight", c.ocp.yaw_weight, oc);
    if (o.contains("yaw_rate_limit")) {
      if (o.at("yaw_rate_limit").is_null()) {
        c.ocp.yaw_rate_limit.reset();
      } else {
        double lim = 0.0;
        read(o, "yaw_rate_limit", lim, oc);
        c.ocp.yaw_rate_limit = lim;
      }
    }
  }

  if (j.contains("noise")) {
    const json& n = j.at("noise");
    const std::string nc = "noise";
    check_keys(n,
               {"position_psd", "velocity_psd", "attitude_psd", "force_psd", "position_std",
                "velocity_std", "attitude_std", "initial_force_std"},
               nc);
    read(n, "position_psd", c.noise.position_psd, nc);
    read(n, "velocity_psd", c.noise.velocity_psd, nc);
    read(n, "attitude_psd", c.noise.attitude_psd, nc);
    read(n, "force_psd", c.noise.force_psd, nc);
    read(n, "position_std", c.noise.position_std, nc);
    read(n, "velocity_std", c.noise.velocity_std, nc);
    read(n, "attitude_std", c.noise.attitude_std, nc);
    read(n, "initial_force_std", c.noise.initial_force_std, nc);
  }

  if (j.contains("wind")) {
    const json& w = j.at("wind");
    const std::string wc = "wind";
    check_keys(w,
               {"mode", "force", "speed", "coefficient", "gust_std", "gust_bandwidth_hz",
                "gust_components", "seed"},
               wc);
    if (w.contains("mode")) c.wind.mode = wind_from_string(w.at("mode").get<std::string>());
    if (w.contains("force")) c.wind.force = read_vec3(w.at("force"), "wind.force");
    if (w.contains("speed") && !w.at("speed").is_null())
      c.wind.speed = read_vec3(w.at("speed"), "wind.speed");
    read(w, "coefficient", c.wind.coefficient, wc);
    read(w, "gust_std", c.wind.gust_std, wc);
    read(w, "gust_bandwidth_hz", c.wind.gust_bandwidth_hz, wc);
    read(w, "gust_components", c.wind.gust_components, wc);
    read(w, "seed", c.wind.seed, wc);
  }

  if (j.contains("trajectory")) {
    const json& t = j.at("trajectory");
    const std::string tc = "trajectory";
    check_keys(t,
               {"preset", "position", "step", "yaw", "figure8_x_amplitude", "figure8_y_scale",
                "figure8_duration", "segments"},
               tc);
    auto& s = c.trajectory;
    read(t, "preset", s.preset, tc);
    if (t.contains("position")) s.position = read_vec3(t.at("position"), "trajectory.position");
    if (t.contains("step")) s.step = read_vec3(t.at("step"), "trajectory.step");
    read(t, "yaw", s.yaw, tc);
    read(t, "figure8_x_amplitude", s.figure8_x_amplitude, tc);
    read(t, "figure8_y_scale", s.figure8_y_scale, tc);
    read(t, "figure8_duration", s.figure8_duration, tc);
    if (t.contains("segments")) {
      if (!t.at("segments").is_array()) throw InvalidInput("trajectory.segments: expected array");
      for (const json& seg : t.at("segments")) {
        const std::string sc = "trajectory.segments[]";
        check_keys(seg, {"duration", "x", "y", "z", "yaw"}, sc);
        PolySegment ps;
        read(seg, "duration", ps.duration, sc);
        ps.x = read_coeffs(seg, "x", sc);
        ps.y = read_coeffs(seg, "y", sc);
        ps.z = read_coeffs(seg, "z", sc);
        ps.yaw = read_coeffs(seg, "yaw", sc);
        s.segments.push_back(std::move(ps));
      }
    }
  }

  if (j.contains("mismatch")) {
    const json& m = j.at("mismatch");
    const std::string mc = "mismatch";
    check_keys(m, {"mass_scale", "drag_scale", "tau_scale"}, mc);
    read(m, "mass_scale", c.mismatch.mass_scale, mc);
    read(m, "drag_scale", c.mismatch.drag_scale, mc);
    read(m, "tau_scale", c.mismatch.tau_scale, mc);
  }

  c.validate();
  return c;
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open scenario file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidInput("scenario file '" + path + "': " + e.what());
  }
  return parse_scenario(j);
}

json to_json(const ScenarioConfig& c) {
  json j = json::object();
  j["schema_version"] = c.schema_version;
  j["name"] = c.name;
  j["controller"] = to_string(c.controller);
  j["duration"] = c.duration;
  j["seed"] = c.seed;
  j["measurement_noise"] = c.measurement_noise;
  j["estimator"] = to_string(c.estimator);
  j["metrics_transient"] = c.metrics_transient;

  const auto& v = c.vehicle;
  j["vehicle"] = {{"mass", v.mass},
                  {"g", v.g},
                  {"k_drag", v.k_drag},
                  {"tau_phi", v.tau_phi},
                  {"tau_theta", v.tau_theta},
                  {"k_phi", v.k_phi},
                  {"k_theta", v.k_theta},
                  {"roll_min_deg", v.roll_min_deg},
                  {"roll_max_deg", v.roll_max_deg},
                  {"pitch_min_deg", v.pitch_min_deg},
                  {"pitch_max_deg", v.pitch_max_deg},
                  {"thrust_min_newton", v.thrust_min_newton},
                  {"thrust_max_newton", v.thrust_max_newton}};

  json ocp = json::object();
  ocp["horizon"] = c.ocp.horizon;
  ocp["dt_pred"] = c.ocp.dt_pred;
  ocp["control_period"] = c.ocp.control_period;
  ocp["state_weight"] = matrix_json(c.ocp.state_weight);
  ocp["input_weight"] = matrix_json(c.ocp.input_weight);
  ocp["terminal_weight"] =
      c.ocp.terminal_weight ? matrix_json(*c.ocp.terminal_weight) : json("riccati");
  ocp["yaw_weight"] = c.ocp.yaw_weight;
  ocp["yaw_rate_limit"] = c.ocp.yaw_rate_limit ? json(*c.ocp.yaw_rate_limit) : json(nullptr);
  j["ocp"] = ocp;

  const auto& n = c.noise;
  j["noise"] = {{"position_psd", n.position_psd},         {"velocity_psd", n.velocity_psd},
                {"attitude_psd", n.attitude_psd},         {"force_psd", n.force_psd},
                {"position_std", n.position_std},         {"velocity_std", n.velocity_std},
                {"attitude_std", n.attitude_std},         {"initial_force_std", n.initial_force_std}};

  const auto& w = c.wind;
  j["wind"] = {{"mode", to_string(w.mode)},
               {"force", vec_json(w.force)},
               {"speed", w.speed ? vec_json(*w.speed) : json(nullptr)},
               {"coefficient", w.coefficient},
               {"gust_std", w.gust_std},
               {"gust_bandwidth_hz", w.gust_bandwidth_hz},
               {"gust_components", w.gust_components},
               {"seed", w.seed}};

  const auto& t = c.trajectory;
  json segs = json::array();
  for (const auto& s : t.segments)
    segs.push_back({{"duration", s.duration}, {"x", s.x}, {"y", s.y}, {"z", s.z}, {"yaw", s.yaw}});
  j["trajectory"] = {{"preset", t.preset},
                     {"position", vec_json(t.position)},
                     {"step", vec_json(t.step)},
                     {"yaw", t.yaw},
                     {"figure8_x_amplitude", t.figure8_x_amplitude},
                     {"figure8_y_scale", t.figure8_y_scale},
                     {"figure8_duration", t.figure8_duration},
                     {"segments", segs}};

  j["mismatch"] = {{"mass_scale", c.mismatch.mass_scale},
                   {"drag_scale", c.mismatch.drag_scale},
                   {"tau_scale", c.mismatch.tau_scale}};
  return j;
}

OcpConfig step_response_ocp() {
  OcpConfig ocp;
  Vector8 q;
  q << 200, 200, 200, 10, 10, 10, 10, 10;
  ocp.state_weight = q.asDiagonal();
  ocp.input_weight = Vector3(1000, 1000, 0.05).asDiagonal();
  return ocp;
}

std::vector<ScenarioConfig> default_suite() {
  std::vector<ScenarioConfig> suite;

  ScenarioConfig hover;
  hover.name = "hover";
  hover.duration = 10.0;
  suite.push_back(hover);

  ScenarioConfig hover_wind = hover;
  hover_wind.name = "hover_wind";
  hover_wind.duration = 15.0;
  hover_wind.measurement_noise = true;
  hover_wind.wind.mode = WindMode::Gusty;
  hover_wind.wind.speed = Vector3(11.0, 0.0, 0.0);
  hover_wind.wind.seed = 11;
  suite.push_back(hover_wind);

  ScenarioConfig step;
  step.name = "step";
  step.duration = 8.0;
  step.trajectory.preset = "step";
  step.trajectory.step = Vector3(2.0, 0.0, 0.0);
  step.ocp = step_response_ocp();
  suite.push_back(step);

  ScenarioConfig fig8;
  fig8.name = "figure8_wind";
  fig8.duration = 20.0;
  fig8.measurement_noise = true;
  fig8.trajectory.preset = "figure8";
  fig8.wind = hover_wind.wind;
  suite.push_back(fig8);

  return suite;
}

}  // namespace mavmpc
