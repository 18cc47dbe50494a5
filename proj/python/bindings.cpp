#include "mavmpc/box_qp.hpp"
#include "mavmpc/errors.hpp"
#include "mavmpc/dynamics.hpp"
#include "mavmpc/ekf.hpp"
#include "mavmpc/integrator.hpp"
#include "mavmpc/lmpc.hpp"
#include "mavmpc/metrics.hpp"
#include "mavmpc/nmpc.hpp"
#include "mavmpc/simulator.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace mavmpc;
using nlohmann::json;

namespace {

py::dict command_dict(const ControlOutput& out) {
  py::dict d;
  d["phi_cmd"] = out.command.phi_cmd;
  d["theta_cmd"] = out.command.theta_cmd;
  d["psi_rate_cmd"] = out.command.psi_rate_cmd;
  d["thrust_cmd"] = out.command.thrust_cmd;
  d["fault"] = out.fault;
  d["qp_iterations"] = out.qp_iterations;
  d["solve_time_s"] = out.solve_time_s;
  return d;
}

py::dict sample_dict(const RefSample& s) {
  py::dict d;
  d["p"] = s.p;
  d["v"] = s.v;
  d["a"] = s.a;
  d["yaw"] = s.yaw;
  d["yaw_rate"] = s.yaw_rate;
  return d;
}

// Columns of a log as lists, keyed by the CSV header names.
py::dict log_columns_dict(const SimLog& log) {
  std::ostringstream os;
  write_log_csv(log, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);  // metadata
  std::getline(in, line);  // header
  const std::vector<std::string>& names = log_columns();
  std::vector<std::vector<double>> cols(names.size());
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    for (std::size_t c = 0; c < names.size() && std::getline(row, cell, ','); ++c)
      cols[c].push_back(std::stod(cell));
  }
  py::dict d;
  for (std::size_t c = 0; c < names.size(); ++c) d[py::str(names[c])] = cols[c];
  return d;
}

ScenarioConfig config_from(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  return parse_scenario(j);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Linear and nonlinear MPC for multirotor trajectory tracking";

  // Malformed QPs are caller errors; an iteration limit stays a RuntimeError.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const QpError& e) {
      if (e.kind() == QpError::Kind::IterationLimit) {
        PyErr_SetString(PyExc_RuntimeError, e.what());
      } else {
        PyErr_SetString(PyExc_ValueError, e.what());
      }
    }
  });

  py::class_<InputLimits>(m, "InputLimits")
      .def(py::init<>())
      .def_readwrite("phi_min", &InputLimits::phi_min)
      .def_readwrite("phi_max", &InputLimits::phi_max)
      .def_readwrite("theta_min", &InputLimits::theta_min)
      .def_readwrite("theta_max", &InputLimits::theta_max)
      .def_readwrite("thrust_min", &InputLimits::thrust_min)
      .def_readwrite("thrust_max", &InputLimits::thrust_max)
      .def("validate", &InputLimits::validate);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("mass", &ModelParams::mass)
      .def_readwrite("g", &ModelParams::g)
      .def_readwrite("k_drag", &ModelParams::k_drag)
      .def_readwrite("tau_phi", &ModelParams::tau_phi)
      .def_readwrite("tau_theta", &ModelParams::tau_theta)
      .def_readwrite("k_phi", &ModelParams::k_phi)
      .def_readwrite("k_theta", &ModelParams::k_theta)
      .def_readwrite("limits", &ModelParams::limits)
      .def("validate", &ModelParams::validate);

  m.def("dynamics", &dynamics, py::arg("x"), py::arg("input"), py::arg("psi_rate_cmd") = 0.0,
        py::arg("force") = Vector3::Zero(), py::arg("params") = ModelParams{},
        "State derivative for x = (p, v, phi, theta, psi) and input (phi_cmd, theta_cmd, thrust).");

  m.def(
      "linearize_hover",
      [](const ModelParams& p) {
        const ContinuousLinearModel c = linearize_hover(p);
        return py::make_tuple(c.A, c.B, c.Bd);
      },
      py::arg("params") = ModelParams{}, "Continuous hover model (A, B, Bd), heading-free.");

  m.def(
      "discretize_hover",
      [](const ModelParams& p, double dt) {
        const LinearModel d = discretize_zoh(linearize_hover(p), dt);
        return py::make_tuple(d.A, d.B, d.Bd);
      },
      py::arg("params") = ModelParams{}, py::arg("dt") = 0.1);

  m.def(
      "integrate_step",
      [](const Vector9& x, const Vector3& input, double psi_rate, const Vector3& f, double dt,
         const ModelParams& p) {
        const StepResult r = integrate_step(x, input, psi_rate, f, dt, p);
        py::dict d;
        d["x_next"] = r.x_next;
        d["dx"] = r.dx;
        d["du"] = r.du;
        d["df"] = r.df;
        d["newton_iterations"] = r.newton_iterations;
        return d;
      },
      py::arg("x"), py::arg("input"), py::arg("psi_rate_cmd") = 0.0,
      py::arg("force") = Vector3::Zero(), py::arg("dt") = 0.1, py::arg("params") = ModelParams{});

  m.def(
      "solve_box_qp",
      [](const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::VectorXd& lb,
         const Eigen::VectorXd& ub) {
        const QpSolution s = solve_box_qp(BoxQp{H, g, lb, ub});
        py::dict d;
        d["z"] = s.z;
        d["iterations"] = s.iterations;
        d["kkt_residual"] = s.kkt_residual;
        d["objective"] = s.objective;
        return d;
      },
      py::arg("H"), py::arg("g"), py::arg("lb"), py::arg("ub"),
      "min 0.5 z'Hz + g'z subject to lb <= z <= ub, H positive definite.");

  m.def(
      "riccati_terminal",
      [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
         const Eigen::MatrixXd& R) { return riccati_terminal(A, B, Q, R); },
      py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"));

  py::class_<Trajectory>(m, "Trajectory")
      .def_static("hover", &Trajectory::hover, py::arg("position"), py::arg("yaw") = 0.0)
      .def_static("figure_eight", &Trajectory::figure_eight, py::arg("center"),
                  py::arg("x_amplitude") = 3.0, py::arg("y_scale") = 4.5,
                  py::arg("duration") = 16.0)
      .def("sample", [](const Trajectory& t, double time) { return sample_dict(t.sample(time)); })
      .def_property_readonly("duration", &Trajectory::duration);

  py::class_<OcpConfig>(m, "OcpConfig")
      .def(py::init<>())
      .def_readwrite("horizon", &OcpConfig::horizon)
      .def_readwrite("dt_pred", &OcpConfig::dt_pred)
      .def_readwrite("state_weight", &OcpConfig::state_weight)
      .def_readwrite("input_weight", &OcpConfig::input_weight)
      .def_readwrite("terminal_weight", &OcpConfig::terminal_weight)
      .def_readwrite("yaw_weight", &OcpConfig::yaw_weight)
      .def("validate", &OcpConfig::validate);

  auto as_state = [](const Vector9& x) { return MavState::from_vector(x); };

  py::class_<LinearMpc>(m, "LinearMpc")
      .def(py::init<ModelParams, OcpConfig>(), py::arg("params") = ModelParams{},
           py::arg("config") = OcpConfig{})
      .def(
          "step",
          [as_state](LinearMpc& c, const Vector9& x, const Vector3& force, const Trajectory& tr,
                     double t) { return command_dict(c.step(as_state(x), {force}, tr, t)); },
          py::arg("x"), py::arg("force"), py::arg("trajectory"), py::arg("t"))
      .def("reset", &LinearMpc::reset)
      .def_property_readonly("terminal_weight", &LinearMpc::terminal_weight);

  py::class_<NonlinearMpc>(m, "NonlinearMpc")
      .def(py::init<ModelParams, OcpConfig>(), py::arg("params") = ModelParams{},
           py::arg("config") = OcpConfig{})
      .def(
          "step",
          [as_state](NonlinearMpc& c, const Vector9& x, const Vector3& force, const Trajectory& tr,
                     double t) { return command_dict(c.step(as_state(x), {force}, tr, t)); },
          py::arg("x"), py::arg("force"), py::arg("trajectory"), py::arg("t"))
      .def("reset", &NonlinearMpc::reset);

  py::class_<DisturbanceEkf>(m, "DisturbanceEkf")
      .def(py::init([](const ModelParams& p) { return DisturbanceEkf(p, NoiseConfig{}); }),
           py::arg("params") = ModelParams{})
      .def(
          "predict",
          [](DisturbanceEkf& e, double phi_cmd, double theta_cmd, double psi_rate_cmd,
             double thrust_cmd, double dt) {
            e.predict({phi_cmd, theta_cmd, psi_rate_cmd, thrust_cmd}, dt);
          },
          py::arg("phi_cmd"), py::arg("theta_cmd"), py::arg("psi_rate_cmd"),
          py::arg("thrust_cmd"), py::arg("dt"))
      .def(
          "update", [](DisturbanceEkf& e, const Vector9& z) { e.update(MavState::from_vector(z)); },
          py::arg("measurement"))
      .def_property_readonly("force", [](const DisturbanceEkf& e) { return e.force().newtons; })
      .def_property_readonly("covariance",
                             [](const DisturbanceEkf& e) { return e.state().cov; });

  // Scenario-level API, configs exchanged as JSON text.
  m.def(
      "default_suite_json",
      [] {
        std::vector<std::string> out;
        for (const auto& c : default_suite()) out.push_back(to_json(c).dump());
        return out;
      },
      "Built-in scenarios as canonical JSON strings.");
  m.def(
      "canonical_config_json", [](const std::string& text) { return to_json(config_from(text)).dump(); },
      py::arg("config_json"));
  m.def(
      "simulate_json",
      [](const std::string& text, const std::string& controller) {
        const ScenarioConfig cfg = config_from(text);
        SimLog log;
        {
          py::gil_scoped_release release;
          log = run_scenario(cfg, controller_from_string(controller));
        }
        const MetricsReport rep =
            compute_metrics(log, cfg.trajectory.kind(), {cfg.metrics_transient});
        py::dict d;
        d["columns"] = log_columns_dict(log);
        d["metrics_json"] = to_json(rep).dump();
        d["timing_json"] = timing_json(rep).dump();
        d["aborted"] = log.aborted;
        d["abort_reason"] = log.abort_reason;
        std::ostringstream csv;
        write_log_csv(log, csv);
        d["csv"] = csv.str();
        return d;
      },
      py::arg("config_json"), py::arg("controller"));
  m.def(
      "run_suite_json",
      [](const std::vector<std::string>& texts) {
        std::vector<ScenarioConfig> configs;
        for (const auto& t : texts) configs.push_back(config_from(t));
        SuiteResult r;
        {
          py::gil_scoped_release release;
          r = run_suite(configs, false);
        }
        return py::make_tuple(suite_report_json(r).dump(), suite_table(r));
      },
      py::arg("config_jsons"));
}
