// mavbench: run scenarios and suites for the linear and nonlinear MPC, and
// recompute metrics from saved logs.

#include "mavmpc/errors.hpp"
#include "mavmpc/metrics.hpp"
#include "mavmpc/scenario.hpp"
#include "mavmpc/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mavmpc;

namespace {

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
  return code;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  out << content;
}

std::vector<ScenarioConfig> load_configs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidInput("'" + path + "': " + e.what());
  }
  std::vector<ScenarioConfig> out;
  if (j.is_object() && j.contains("scenarios")) {
    if (j.size() != 1 || !j["scenarios"].is_array())
      throw InvalidInput("'" + path + "': suite files hold only a \"scenarios\" array");
    for (const auto& s : j["scenarios"]) out.push_back(parse_scenario(s));
  } else {
    out.push_back(parse_scenario(j));
  }
  return out;
}

void write_outputs(const SuiteResult& result, const fs::path& dir) {
  fs::create_directories(dir);
  json timing = json::array();
  for (std::size_t i = 0; i < result.logs.size(); ++i) {
    const SimLog& log = result.logs[i];
    const std::string stem = log.scenario + "_" + log.controller;
    std::ofstream csv(dir / (stem + ".csv"), std::ios::binary);
    write_log_csv(log, csv);
    std::ofstream tcsv(dir / (stem + "_timing.csv"), std::ios::binary);
    write_timing_csv(log, tcsv);
    timing.push_back(timing_json(result.reports[i]));
  }
  write_file(dir / "report.json", suite_report_json(result).dump(2) + "\n");
  write_file(dir / "timing.json", json{{"timing", timing}}.dump(2) + "\n");
  write_file(dir / "report.txt", suite_table(result));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MPC benchmark for multirotor trajectory tracking"};
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::string controller;
  bool serial = false;

  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("--config", configs, "Scenario JSON file")->required()->expected(1);
  run->add_option("--out-dir", out_dir, "Output directory");
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--controller", controller, "lmpc, nmpc or both")
      ->check(CLI::IsMember({"lmpc", "nmpc", "both"}));

  auto* suite = app.add_subcommand("suite", "Run a suite with both controllers");
  suite->add_option("--config", configs,
                    "Scenario or suite JSON files (default: the built-in suite)");
  suite->add_option("--out-dir", out_dir, "Output directory");
  suite->add_option("--seed", seed, "Override every scenario seed");
  suite->add_option("--controller", controller, "lmpc, nmpc or both")
      ->check(CLI::IsMember({"lmpc", "nmpc", "both"}));
  suite->add_flag("--serial", serial, "Run scenarios one after another");

  std::string log_path, timing_path, kind_name;
  double transient = 2.0;
  auto* metrics = app.add_subcommand("metrics", "Recompute metrics from a CSV log");
  metrics->add_option("--log", log_path, "Log CSV written by run or suite")->required();
  metrics->add_option("--timing", timing_path, "Matching timing CSV");
  metrics->add_option("--kind", kind_name, "hover, step or trajectory (default: from the log)")
      ->check(CLI::IsMember({"hover", "step", "trajectory"}));
  metrics->add_option("--transient", transient, "Seconds excluded from RMSE");

  auto* print = app.add_subcommand("config", "Print the canonical form of a scenario file");
  print->add_option("--config", configs, "Scenario or suite JSON file (default: the built-in suite)")
      ->expected(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*print) {
      const auto loaded = configs.empty() ? default_suite() : load_configs(configs.front());
      if (loaded.size() == 1) {
        std::cout << to_json(loaded.front()).dump(2) << "\n";
      } else {
        json doc{{"scenarios", json::array()}};
        for (const auto& c : loaded) doc["scenarios"].push_back(to_json(c));
        std::cout << doc.dump(2) << "\n";
      }
      return 0;
    }

    if (*metrics) {
      std::ifstream in(log_path, std::ios::binary);
      if (!in) throw InvalidInput("cannot open '" + log_path + "'");
      SimLog log = read_log_csv(in);
      if (!timing_path.empty()) {
        std::ifstream tin(timing_path, std::ios::binary);
        if (!tin) throw InvalidInput("cannot open '" + timing_path + "'");
        read_timing_csv(tin, log);
      }
      const ScenarioKind kind = kind_name.empty() ? log.kind : scenario_kind_from_string(kind_name);
      const MetricsReport rep = compute_metrics(log, kind, {transient});
      json doc = to_json(rep);
      if (!timing_path.empty()) doc["timing"] = timing_json(rep);
      std::cout << doc.dump(2) << "\n";
      return 0;
    }

    std::vector<ScenarioConfig> scenarios;
    if (configs.empty()) {
      scenarios = default_suite();
    } else {
      for (const auto& path : configs)
        for (auto& c : load_configs(path)) scenarios.push_back(std::move(c));
    }
    if (*run && scenarios.size() != 1)
      throw InvalidInput("run expects a single scenario; use suite for several");
    for (auto& s : scenarios) {
      if (seed) s.seed = *seed;
      if (!controller.empty()) s.controller = controller_from_string(controller);
    }

    const SuiteResult result = run_suite(scenarios, !serial && !*run);
    write_outputs(result, out_dir);
    std::cout << suite_table(result);
    for (const auto& r : result.reports)
      if (r.aborted) return fail("aborted", r.scenario + "/" + r.controller + " aborted", 4);
    return 0;
  } catch (const InvalidInput& e) {
    return fail("invalid_input", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 3);
  }
}
