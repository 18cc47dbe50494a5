#pragma once

#include "mavmpc/controller.hpp"
#include "mavmpc/ekf.hpp"
#include "mavmpc/reference.hpp"
#include "mavmpc/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mavmpc {

inline constexpr int kScenarioSchemaVersion = 1;

enum class ControllerKind { Lmpc, Nmpc, Both };
enum class EstimatorMode { Ekf, None, Truth };
enum class WindMode { Off, Constant, Gusty };
enum class ScenarioKind { Hover, Step, Trajectory };

std::string to_string(ControllerKind k);
std::string to_string(EstimatorMode m);
std::string to_string(WindMode m);
std::string to_string(ScenarioKind k);
ControllerKind controller_from_string(const std::string& s);
ScenarioKind scenario_kind_from_string(const std::string& s);

struct WindProfile {
  WindMode mode = WindMode::Off;
  /// Mean force in Newtons; replaced by coefficient * speed when speed is set.
  Vector3 force = Vector3::Zero();
  std::optional<Vector3> speed;
  double coefficient = 0.3;  // N per m/s
  double gust_std = 0.5;     // N, per axis
  double gust_bandwidth_hz = 1.0;
  int gust_components = 16;
  std::uint64_t seed = 0;

  Vector3 mean_force() const;
};

struct TrajectorySpec {
  std::string preset = "hover";  // hover | step | figure8 | segments
  Vector3 position{0.0, 0.0, 1.0};
  Vector3 step{2.0, 0.0, 0.0};
  double yaw = 0.0;
  double figure8_x_amplitude = 3.0;
  double figure8_y_scale = 4.5;
  double figure8_duration = 16.0;
  std::vector<PolySegment> segments;

  ScenarioKind kind() const;
  Trajectory build() const;
  /// Vehicle start: the hover point, the step origin, or the trajectory start.
  MavState initial_state() const;
};

/// Vehicle block as written in scenario files: limits in degrees and Newtons.
struct VehicleSpec {
  double mass = 3.42;
  double g = 9.81;
  double k_drag = 0.01;
  double tau_phi = 0.1901;
  double tau_theta = 0.1721;
  double k_phi = 0.91;
  double k_theta = 0.96;
  double roll_min_deg = -45.0;
  double roll_max_deg = 45.0;
  double pitch_min_deg = -45.0;
  double pitch_max_deg = 45.0;
  double thrust_min_newton = 13.5;
  double thrust_max_newton = 40.3;

  /// Thrust limits converted once to mass-normalized units.
  ModelParams params() const;
};

/// Plant/controller mismatch knobs applied to the simulated vehicle only.
struct MismatchConfig {
  double mass_scale = 1.0;
  double drag_scale = 1.0;
  double tau_scale = 1.0;
};

struct ScenarioConfig {
  int schema_version = kScenarioSchemaVersion;
  std::string name = "scenario";
  ControllerKind controller = ControllerKind::Both;
  double duration = 10.0;
  std::uint64_t seed = 1;
  VehicleSpec vehicle;
  OcpConfig ocp;
  NoiseConfig noise;
  bool measurement_noise = false;
  EstimatorMode estimator = EstimatorMode::Ekf;
  WindProfile wind;
  TrajectorySpec trajectory;
  MismatchConfig mismatch;
  double metrics_transient = 2.0;  // seconds excluded from RMSE

  void validate() const;
};

/// Throws InvalidInput on schema violations, including unknown keys.
ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig load_scenario_file(const std::string& path);
/// Canonical form: every field written, fixed key order.
nlohmann::json to_json(const ScenarioConfig& config);

/// Aggressive position weights with cheap thrust, used by the step scenario.
OcpConfig step_response_ocp();

/// Built-in scenarios: hover, hover_wind, step, figure8_wind.
std::vector<ScenarioConfig> default_suite();

}  // namespace mavmpc
