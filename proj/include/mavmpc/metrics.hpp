#pragma once

#include "mavmpc/scenario.hpp"
#include "mavmpc/simulator.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace mavmpc {

struct MetricsOptions {
  double transient = 2.0;  // seconds excluded from RMSE
};

struct MetricsReport {
  std::string scenario;
  std::string controller;
  ScenarioKind kind = ScenarioKind::Hover;
  Vector3 rmse_cm = Vector3::Zero();
  double total_rmse_cm = 0.0;
  std::optional<double> rise_time_s;   // 10-90 %, step scenarios only
  std::optional<double> overshoot_pct; // step scenarios only
  double thrust_cmd_min = 0.0;
  double thrust_cmd_max = 0.0;
  int faults = 0;
  bool aborted = false;
  double mean_solve_ms = 0.0;
  double max_solve_ms = 0.0;
};

/// Throws InvalidInput for an empty log, a transient window covering the whole
/// log, or step metrics on a non-step log.
MetricsReport compute_metrics(const SimLog& log, ScenarioKind kind, MetricsOptions options = {});

/// Times at which a sampled signal first reaches `level`, linearly
/// interpolated; nullopt if it never does.
std::optional<double> first_crossing(const std::vector<double>& t, const std::vector<double>& y,
                                     double level);

/// Deterministic fields only (no wall-clock data).
nlohmann::json to_json(const MetricsReport& report);
nlohmann::json timing_json(const MetricsReport& report);

struct SuiteResult {
  std::vector<MetricsReport> reports;  // ordered by scenario name, then controller
  std::vector<SimLog> logs;            // same order
};

/// Runs every scenario with both controllers. Configs that share a name with
/// one controller each form a pair and must carry identical horizons and
/// weights; a mismatch throws InvalidInput before anything runs.
SuiteResult run_suite(const std::vector<ScenarioConfig>& configs, bool parallel = true);

/// Deterministic report document.
nlohmann::json suite_report_json(const SuiteResult& result);
/// Side-by-side plain-text table, including solve times.
std::string suite_table(const SuiteResult& result);

}  // namespace mavmpc
