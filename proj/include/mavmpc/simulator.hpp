#pragma once

#include "mavmpc/controller.hpp"
#include "mavmpc/scenario.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace mavmpc {

inline constexpr double kControlTick = 0.01;  // 100 Hz
inline constexpr int kPlantSubsteps = 10;     // 1 kHz plant integration

/// Wind force at time t. Gusty mode adds a seeded sum of sinusoids with
/// frequencies below the bandwidth, a pure function of (profile, t).
ExternalForce inject_wind(const WindProfile& profile, double t);

struct SimLogRow {
  double t = 0.0;
  Vector9 truth = Vector9::Zero();
  Vector9 measured = Vector9::Zero();
  RefSample reference;
  AttitudeThrustCommand command;
  Vector3 force_true = Vector3::Zero();
  Vector3 force_estimate = Vector3::Zero();
  int qp_iterations = 0;
  bool fault = false;
  double solve_time_s = 0.0;  // wall clock; kept out of the CSV log
};

struct SimLog {
  std::string scenario;
  std::string controller;
  ScenarioKind kind = ScenarioKind::Hover;
  Vector3 initial_position = Vector3::Zero();
  Vector3 target_position = Vector3::Zero();
  bool aborted = false;
  std::string abort_reason;
  std::vector<SimLogRow> rows;
};

/// Closed-loop run with one controller (`which` must not be Both): plant
/// integrated with RK4 at 1 kHz, estimator and controller at 100 Hz, command
/// held between ticks. A roll or pitch at or beyond pi/2 stops the run with
/// `aborted` set. Deterministic given the config and seed.
SimLog run_scenario(const ScenarioConfig& config, ControllerKind which);

/// Runs the selected controller, or both (LMPC first) for ControllerKind::Both.
std::vector<SimLog> run_scenario_all(const ScenarioConfig& config);

std::unique_ptr<TrackingController> make_controller(ControllerKind which,
                                                    const ScenarioConfig& config);

/// CSV with a metadata comment line and a header line; no wall-clock data.
void write_log_csv(const SimLog& log, std::ostream& out);
/// t, solve_time_ms
void write_timing_csv(const SimLog& log, std::ostream& out);
/// Reads a log written by write_log_csv (solve times zero).
SimLog read_log_csv(std::istream& in);
/// Fills solve times from a timing CSV; rows must match.
void read_timing_csv(std::istream& in, SimLog& log);

/// Column names, in order.
const std::vector<std::string>& log_columns();

}  // namespace mavmpc
