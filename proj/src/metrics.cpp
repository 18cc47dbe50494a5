#include "mavmpc/metrics.hpp"

#include "mavmpc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace mavmpc {

using nlohmann::json;

std::optional<double> first_crossing(const std::vector<double>& t, const std::vector<double>& y,
                                     double level) {
  if (t.size() != y.size()) throw InvalidInput("first_crossing: size mismatch");
  if (t.empty()) return std::nullopt;
  if (y[0] >= level) return t[0];
  for (std::size_t i = 1; i < y.size(); ++i) {
    if (y[i] >= level) {
      const double a = (level - y[i - 1]) / (y[i] - y[i - 1]);
      return t[i - 1] + a * (t[i] - t[i - 1]);
    }
  }
  return std::nullopt;
}

MetricsReport compute_metrics(const SimLog& log, ScenarioKind kind, MetricsOptions options) {
  if (log.rows.empty()) throw InvalidInput("compute_metrics: empty log");
  if (!(options.transient >= 0.0)) throw InvalidInput("compute_metrics: transient must be >= 0");
  if (kind == ScenarioKind::Step && log.kind != ScenarioKind::Step)
    throw InvalidInput("compute_metrics: step metrics requested on a " + to_string(log.kind) +
                       " log");

  MetricsReport r;
  r.scenario = log.scenario;
  r.controller = log.controller;
  r.kind = kind;
  r.aborted = log.aborted;

  Vector3 sq = Vector3::Zero();
  int n = 0;
  double solve_sum = 0.0;
  r.thrust_cmd_min = log.rows.front().command.thrust_cmd;
  r.thrust_cmd_max = r.thrust_cmd_min;
  for (const auto& row : log.rows) {
    r.thrust_cmd_min = std::min(r.thrust_cmd_min, row.command.thrust_cmd);
    r.thrust_cmd_max = std::max(r.thrust_cmd_max, row.command.thrust_cmd);
    r.faults += row.fault ? 1 : 0;
    solve_sum += row.solve_time_s;
    r.max_solve_ms = std::max(r.max_solve_ms, row.solve_time_s * 1e3);
    if (row.t < options.transient) continue;
    const Vector3 e = row.truth.head<3>() - row.reference.p;
    sq += e.cwiseAbs2();
    ++n;
  }
  if (n == 0) throw InvalidInput("compute_metrics: transient window covers the whole log");
  r.rmse_cm = (sq / n).cwiseSqrt() * 100.0;
  r.total_rmse_cm = r.rmse_cm.norm();
  r.mean_solve_ms = solve_sum / static_cast<double>(log.rows.size()) * 1e3;

  if (kind == ScenarioKind::Step) {
    const Vector3 d = log.target_position - log.initial_position;
    const double amp2 = d.squaredNorm();
    if (!(amp2 > 0.0)) throw InvalidInput("compute_metrics: step amplitude is zero");
    std::vector<double> t, y;
    t.reserve(log.rows.size());
    y.reserve(log.rows.size());
    double peak = -std::numeric_limits<double>::infinity();
    for (const auto& row : log.rows) {
      const double frac = (row.truth.head<3>() - log.initial_position).dot(d) / amp2;
      t.push_back(row.t);
      y.push_back(frac);
      peak = std::max(peak, frac);
    }
    const auto t10 = first_crossing(t, y, 0.1);
    const auto t90 = first_crossing(t, y, 0.9);
    if (t10 && t90) r.rise_time_s = *t90 - *t10;
    r.overshoot_pct = std::max(0.0, peak - 1.0) * 100.0;
  }
  return r;
}

json to_json(const MetricsReport& r) {
  return {{"scenario", r.scenario},
          {"controller", r.controller},
          {"kind", to_string(r.kind)},
          {"rmse_cm", {r.rmse_cm.x(), r.rmse_cm.y(), r.rmse_cm.z()}},
          {"total_rmse_cm", r.total_rmse_cm},
          {"rise_time_s", r.rise_time_s ? json(*r.rise_time_s) : json(nullptr)},
          {"overshoot_pct", r.overshoot_pct ? json(*r.overshoot_pct) : json(nullptr)},
          {"thrust_cmd_min", r.thrust_cmd_min},
          {"thrust_cmd_max", r.thrust_cmd_max},
          {"faults", r.faults},
          {"aborted", r.aborted}};
}

json timing_json(const MetricsReport& r) {
  return {{"scenario", r.scenario},
          {"controller", r.controller},
          {"mean_solve_ms", r.mean_solve_ms},
          {"max_solve_ms", r.max_solve_ms}};
}

namespace {

bool same_ocp(const OcpConfig& a, const OcpConfig& b) {
  if (a.horizon != b.horizon || a.dt_pred != b.dt_pred || a.control_period != b.control_period)
    return false;
  if (a.state_weight != b.state_weight || a.input_weight != b.input_weight) return false;
  if (a.terminal_weight.has_value() != b.terminal_weight.has_value()) return false;
  return !a.terminal_weight || *a.terminal_weight == *b.terminal_weight;
}

struct Job {
  const ScenarioConfig* config;
  ControllerKind which;
};

std::pair<MetricsReport, SimLog> run_job(const Job& job) {
  SimLog log = run_scenario(*job.config, job.which);
  MetricsReport rep =
      compute_metrics(log, job.config->trajectory.kind(), {job.config->metrics_transient});
  return {std::move(rep), std::move(log)};
}

}  // namespace

SuiteResult run_suite(const std::vector<ScenarioConfig>& configs, bool parallel) {
  std::map<std::string, std::vector<const ScenarioConfig*>> by_name;
  for (const auto& c : configs) {
    c.validate();
    by_name[c.name].push_back(&c);
  }

  std::vector<Job> jobs;
  for (const auto& [name, group] : by_name) {
    if (group.size() == 1) {
      const ScenarioConfig* c = group.front();
      if (c->controller == ControllerKind::Both) {
        jobs.push_back({c, ControllerKind::Lmpc});
        jobs.push_back({c, ControllerKind::Nmpc});
      } else {
        jobs.push_back({c, c->controller});
      }
      continue;
    }
    if (group.size() != 2 || group[0]->controller == ControllerKind::Both ||
        group[1]->controller == ControllerKind::Both ||
        group[0]->controller == group[1]->controller)
      throw InvalidInput("suite: scenario '" + name +
                         "' must appear once, or twice with one controller each");
    if (!same_ocp(group[0]->ocp, group[1]->ocp))
      throw InvalidInput("suite: scenario '" + name +
                         "' pairs controllers with different horizons or weights");
    jobs.push_back({group[0], group[0]->controller});
    jobs.push_back({group[1], group[1]->controller});
  }

  std::vector<std::pair<MetricsReport, SimLog>> results;
  results.reserve(jobs.size());
  if (parallel) {
    std::vector<std::future<std::pair<MetricsReport, SimLog>>> futures;
    for (const auto& job : jobs) futures.push_back(std::async(std::launch::async, run_job, job));
    for (auto& f : futures) results.push_back(f.get());
  } else {
    for (const auto& job : jobs) results.push_back(run_job(job));
  }

  std::stable_sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first.scenario, a.first.controller) <
           std::tie(b.first.scenario, b.first.controller);
  });

  SuiteResult out;
  for (auto& [rep, log] : results) {
    out.reports.push_back(std::move(rep));
    out.logs.push_back(std::move(log));
  }
  return out;
}

json suite_report_json(const SuiteResult& result) {
  json rows = json::array();
  for (const auto& r : result.reports) rows.push_back(to_json(r));
  return {{"schema_version", 1}, {"reports", rows}};
}

std::string suite_table(const SuiteResult& result) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-14s %-5s %8s %8s %8s %9s %7s %9s %8s %8s %6s\n",
                "scenario", "ctrl", "rmse_x", "rmse_y", "rmse_z", "rmse_tot", "rise_s",
                "overshoot", "mean_ms", "max_ms", "faults");
  os << line;
  auto opt = [](const std::optional<double>& v, const char* fmt) {
    char buf[32];
    if (!v) return std::string("-");
    std::snprintf(buf, sizeof(buf), fmt, *v);
    return std::string(buf);
  };
  for (const auto& r : result.reports) {
    std::snprintf(line, sizeof(line), "%-14s %-5s %8.3f %8.3f %8.3f %9.3f %7s %9s %8.3f %8.3f %6d%s\n",
                  r.scenario.c_str(), r.controller.c_str(), r.rmse_cm.x(), r.rmse_cm.y(),
                  r.rmse_cm.z(), r.total_rmse_cm, opt(r.rise_time_s, "%.3f").c_str(),
                  opt(r.overshoot_pct, "%.2f%%").c_str(), r.mean_solve_ms, r.max_solve_ms,
                  r.faults, r.aborted ? "  ABORTED" : "");
    os << line;
  }
  os << "(rmse in cm, post-transient window)\n";
  return os.str();
}

}  // namespace mavmpc
