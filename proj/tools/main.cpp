// Command-line front end: run a scenario, compare constraint variants, or
// validate a scenario file without running it.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conncbf/scenario_io.hpp"
#include "conncbf/simulator.hpp"

namespace {

namespace fs = std::filesystem;
using namespace conncbf;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

fs::path resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("CONNCBF_OUT")) return env;
  return "out";
}

double min_lambda2(const TrajectoryLog& log) {
  double best = std::numeric_limits<double>::infinity();
  for (const StepRecord& r : log.records) best = std::min(best, r.lambda2);
  return best;
}

struct RunSummary {
  std::string name;
  bool completed = false;
  double final_lambda2 = 0.0;
  double min_lambda2 = 0.0;
  double final_cost = 0.0;
};

RunSummary summarize(const std::string& name, const TrajectoryLog& log) {
  RunSummary s;
  s.name = name;
  s.completed = log.completed;
  s.final_lambda2 = log.records.back().lambda2;
  s.min_lambda2 = min_lambda2(log);
  s.final_cost = log.records.back().locational;
  return s;
}

void print_summaries(const std::vector<RunSummary>& summaries) {
  std::printf("%-18s %-10s %14s %14s %14s\n", "variant", "status", "final_lambda2",
              "min_lambda2", "final_H");
  for (const RunSummary& s : summaries) {
    std::printf("%-18s %-10s %14.9g %14.9g %14.9g\n", s.name.c_str(),
                s.completed ? "ok" : "aborted", s.final_lambda2, s.min_lambda2, s.final_cost);
  }
}

std::string summaries_csv(const std::vector<RunSummary>& summaries) {
  std::string out = "variant,status,final_lambda2,min_lambda2,final_H\n";
  char buffer[160];
  for (const RunSummary& s : summaries) {
    std::snprintf(buffer, sizeof buffer, "%s,%s,%.9g,%.9g,%.9g\n", s.name.c_str(),
                  s.completed ? "ok" : "aborted", s.final_lambda2, s.min_lambda2,
                  s.final_cost);
    out += buffer;
  }
  return out;
}

int run_one(const std::string& scenario_path, const std::string& out_flag) {
  const ScenarioConfig scenario = parse_scenario(scenario_path);
  const TrajectoryLog log = run_scenario(scenario);
  const fs::path out_dir = resolve_out_dir(out_flag);
  write_outputs(log, scenario, out_dir);
  print_summaries({summarize("run", log)});
  if (!log.completed) {
    std::cerr << "error: " << log.error << "\n";
    return kExitRuntime;
  }
  std::cout << "outputs written to " << out_dir.string() << "\n";
  return kExitOk;
}

int run_compare(const std::string& scenario_path, const std::string& toggle,
                const std::string& out_flag) {
  const ScenarioConfig base = parse_scenario(scenario_path);
  std::vector<std::pair<std::string, ScenarioConfig>> variants;
  if (toggle == "connectivity") {
    ScenarioConfig enabled = base;
    enabled.constraints.connectivity = true;
    ScenarioConfig disabled = base;
    disabled.constraints.connectivity = false;
    variants = {{"connectivity_on", enabled}, {"connectivity_off", disabled}};
  } else {  // local_link: global connectivity CBF vs link-preservation baseline
    ScenarioConfig global = base;
    global.constraints.connectivity = true;
    global.constraints.local_link = false;
    ScenarioConfig local = base;
    local.constraints.connectivity = false;
    local.constraints.local_link = true;
    variants = {{"global_cbf", global}, {"local_link", local}};
  }

  const fs::path out_dir = resolve_out_dir(out_flag);
  std::vector<RunSummary> summaries;
  bool all_completed = true;
  for (const auto& [name, scenario] : variants) {
    const TrajectoryLog log = run_scenario(scenario);
    write_outputs(log, scenario, out_dir / name);
    summaries.push_back(summarize(name, log));
    all_completed = all_completed && log.completed;
    if (!log.completed) std::cerr << name << " error: " << log.error << "\n";
  }
  print_summaries(summaries);
  {
    std::ofstream out(out_dir / "summary.csv", std::ios::binary | std::ios::trunc);
    out << summaries_csv(summaries);
  }
  std::cout << "outputs written to " << out_dir.string() << "\n";
  return all_completed ? kExitOk : kExitRuntime;
}

int run_check(const std::string& scenario_path) {
  const ScenarioConfig scenario = parse_scenario(scenario_path);
  const Configuration initial = resolve_initial(scenario);
  if (scenario.constraints.connectivity) {
    const SpectralGraph graph = build_spectral_graph(initial, scenario.graph);
    if (graph.lambda2 < kEigenvalueTol) {
      throw ValidationError(
          "check: initial configuration is disconnected but the connectivity constraint is "
          "enabled");
    }
  }
  std::cout << scenario_path << ": ok (" << scenario.robot_count << " robots, "
            << scenario.step_count() << " steps)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Connectivity-maintaining multi-robot control experiments"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_flag;
  std::string toggle;

  CLI::App* run = app.add_subcommand("run", "execute one scenario and write CSV outputs");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("-o,--output", out_flag, "output directory (default: $CONNCBF_OUT or ./out)");

  CLI::App* compare =
      app.add_subcommand("compare", "run a constraint-toggle pair and print a summary");
  compare->add_option("scenario", scenario_path, "scenario file")->required();
  compare->add_option("--toggle", toggle, "connectivity | local_link")
      ->required()
      ->check(CLI::IsMember({"connectivity", "local_link"}));
  compare->add_option("-o,--output", out_flag,
                      "output directory (default: $CONNCBF_OUT or ./out)");

  CLI::App* check = app.add_subcommand("check", "validate a scenario file without running");
  check->add_option("scenario", scenario_path, "scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_one(scenario_path, out_flag);
    if (compare->parsed()) return run_compare(scenario_path, toggle, out_flag);
    return run_check(scenario_path);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
