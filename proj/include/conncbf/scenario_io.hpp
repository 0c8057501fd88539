#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "conncbf/simulator.hpp"

namespace conncbf {

/// Parses and validates a scenario file (JSON, versioned). Unknown keys are
/// rejected; optional keys receive the documented defaults. Errors carry the
/// offending field path or the parser's line/column diagnostics.
ScenarioConfig parse_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario_text(const std::string& text,
                                   std::string_view source_name = "<string>");

/// Fully-resolved echo of a config: every default materialized, stable key
/// order. parse(scenario_to_json(c)) reproduces c.
nlohmann::ordered_json scenario_to_json(const ScenarioConfig& scenario);

/// CSV bodies, 9 significant digits per value, one data row per log record.
std::string format_metrics_csv(const TrajectoryLog& log);
std::string format_positions_csv(const TrajectoryLog& log);

/// Writes metrics.csv, positions.csv and the resolved config echo into
/// out_dir (created if needed; write-temp-then-rename). Incomplete logs
/// additionally produce error.txt with the failure and step index.
void write_outputs(const TrajectoryLog& log, const ScenarioConfig& scenario,
                   const std::filesystem::path& out_dir);

}  // namespace conncbf
