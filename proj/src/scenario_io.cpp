#include "conncbf/scenario_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

namespace conncbf {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ValidationError(path + ": " + message);
}

std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) fail(join(path, item.key()), "unknown key");
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

double get_double(const json& obj, const std::string& path, const char* key) {
  const json* j = find(obj, key);
  if (!j) fail(join(path, key), "missing required key");
  return as_double(*j, join(path, key));
}

double get_double_or(const json& obj, const std::string& path, const char* key,
                     double fallback) {
  const json* j = find(obj, key);
  return j ? as_double(*j, join(path, key)) : fallback;
}

int get_int(const json& obj, const std::string& path, const char* key) {
  const json* j = find(obj, key);
  if (!j) fail(join(path, key), "missing required key");
  if (!j->is_number_integer()) fail(join(path, key), "expected an integer");
  return j->get<int>();
}

int get_int_or(const json& obj, const std::string& path, const char* key, int fallback) {
  const json* j = find(obj, key);
  if (!j) return fallback;
  if (!j->is_number_integer()) fail(join(path, key), "expected an integer");
  return j->get<int>();
}

bool get_bool_or(const json& obj, const std::string& path, const char* key, bool fallback) {
  const json* j = find(obj, key);
  if (!j) return fallback;
  if (!j->is_boolean()) fail(join(path, key), "expected a boolean");
  return j->get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key) {
  const json* j = find(obj, key);
  if (!j) fail(join(path, key), "missing required key");
  if (!j->is_string()) fail(join(path, key), "expected a string");
  return j->get<std::string>();
}

Eigen::VectorXd parse_number_array(const json& j, const std::string& path, int expected) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  if (expected >= 0 && static_cast<int>(j.size()) != expected) {
    fail(path, "expected " + std::to_string(expected) + " entries, got " +
                   std::to_string(j.size()));
  }
  Eigen::VectorXd v(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    v(static_cast<Eigen::Index>(k)) = as_double(j[k], path + "[" + std::to_string(k) + "]");
  }
  return v;
}

Rect parse_rect(const json& j, const std::string& path, int dimension) {
  expect_object(j, path);
  reject_unknown(j, path, {"low", "high"});
  const json* low = find(j, "low");
  const json* high = find(j, "high");
  if (!low || !high) fail(path, "requires both low and high");
  Rect rect{parse_number_array(*low, join(path, "low"), dimension),
            parse_number_array(*high, join(path, "high"), dimension)};
  try {
    rect.validate();
  } catch (const ValidationError& e) {
    fail(path, e.what());
  }
  return rect;
}

DensityField parse_density(const json& j, const std::string& path) {
  expect_object(j, path);
  reject_unknown(j, path, {"kind", "domain", "components"});
  DensityField density;
  const std::string kind = get_string(j, path, "kind");
  if (kind == "uniform") {
    density.kind = DensityField::Kind::uniform;
    if (find(j, "components")) {
      fail(join(path, "components"), "only valid for kind gaussian_mixture");
    }
  } else if (kind == "gaussian_mixture") {
    density.kind = DensityField::Kind::gaussian_mixture;
  } else {
    fail(join(path, "kind"), "expected uniform or gaussian_mixture");
  }
  const json* domain = find(j, "domain");
  if (!domain) fail(join(path, "domain"), "missing required key");
  density.domain = parse_rect(*domain, join(path, "domain"), 2);

  if (density.kind == DensityField::Kind::gaussian_mixture) {
    const json* components = find(j, "components");
    if (!components || !components->is_array() || components->empty()) {
      fail(join(path, "components"), "gaussian_mixture needs a non-empty array");
    }
    for (std::size_t k = 0; k < components->size(); ++k) {
      const std::string cpath = join(path, "components[" + std::to_string(k) + "]");
      const json& cj = (*components)[k];
      expect_object(cj, cpath);
      reject_unknown(cj, cpath, {"center", "scale", "amplitude"});
      GaussianComponent component;
      const json* center = find(cj, "center");
      if (!center) fail(join(cpath, "center"), "missing required key");
      const Eigen::VectorXd c = parse_number_array(*center, join(cpath, "center"), 2);
      component.center = {c(0), c(1)};
      component.scale = get_double_or(cj, cpath, "scale", 1.0);
      component.amplitude = get_double_or(cj, cpath, "amplitude", 1.0);
      density.components.push_back(component);
    }
  }
  try {
    density.validate();
  } catch (const ValidationError& e) {
    fail(path, e.what());
  }
  return density;
}

std::string fmt9(double value) {
  if (std::isnan(value)) return "nan";
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.9g", value);
  return buffer;
}

void atomic_write(const std::filesystem::path& target, const std::string& content) {
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace

ScenarioConfig parse_scenario_text(const std::string& text, std::string_view source_name) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(source_name) + ": " + e.what());
  }
  expect_object(root, "scenario");
  reject_unknown(root, "", {"version", "robots", "graph", "cbf", "controller", "sim"});

  const int version = get_int(root, "", "version");
  if (version != 1) fail("version", "unsupported scenario version " + std::to_string(version));

  ScenarioConfig scenario;

  // graph first: robot spawning defaults depend on the communication radius.
  const json* graph = find(root, "graph");
  if (!graph) fail("graph", "missing required section");
  expect_object(*graph, "graph");
  reject_unknown(*graph, "graph", {"comm_radius", "sigma"});
  scenario.graph.comm_radius = get_double(*graph, "graph", "comm_radius");
  scenario.graph.sigma = get_double_or(*graph, "graph", "sigma",
                                       GraphParams::default_sigma(scenario.graph.comm_radius));

  const json* robots = find(root, "robots");
  if (!robots) fail("robots", "missing required section");
  expect_object(*robots, "robots");
  reject_unknown(*robots, "robots", {"count", "dimension", "initial_positions", "spawn"});
  scenario.robot_count = get_int(*robots, "robots", "count");
  scenario.dimension = get_int_or(*robots, "robots", "dimension", 2);

  const json* positions = find(*robots, "initial_positions");
  const json* spawn = find(*robots, "spawn");
  if (positions && spawn) {
    fail("robots", "initial_positions and spawn are mutually exclusive");
  }
  if (positions) {
    if (!positions->is_array() || static_cast<int>(positions->size()) != scenario.robot_count) {
      fail("robots.initial_positions",
           "expected one row per robot (" + std::to_string(scenario.robot_count) + ")");
    }
    Eigen::MatrixXd mat(scenario.robot_count, scenario.dimension);
    for (int i = 0; i < scenario.robot_count; ++i) {
      mat.row(i) = parse_number_array((*positions)[i],
                                      "robots.initial_positions[" + std::to_string(i) + "]",
                                      scenario.dimension)
                       .transpose();
    }
    scenario.initial_positions = std::move(mat);
  } else {
    SpawnSpec spec;
    if (spawn) {
      expect_object(*spawn, "robots.spawn");
      reject_unknown(*spawn, "robots.spawn", {"seed", "region"});
      const json* seed = find(*spawn, "seed");
      if (seed) {
        if (!seed->is_number_unsigned() && !seed->is_number_integer()) {
          fail("robots.spawn.seed", "expected a nonnegative integer");
        }
        spec.seed = seed->get<std::uint64_t>();
      }
      const json* region = find(*spawn, "region");
      if (region) {
        spec.region = parse_rect(*region, "robots.spawn.region", scenario.dimension);
      }
    }
    if (spec.region.low.size() == 0) {
      // Default square sized so a connected placement is likely.
      const double side =
          scenario.graph.comm_radius * (1.0 + std::sqrt(double(scenario.robot_count)) / 2.0);
      spec.region.low = Eigen::VectorXd::Zero(scenario.dimension);
      spec.region.high = Eigen::VectorXd::Constant(scenario.dimension, side);
    }
    scenario.spawn = spec;
  }

  const json* cbf = find(root, "cbf");
  if (!cbf) fail("cbf", "missing required section");
  expect_object(*cbf, "cbf");
  reject_unknown(*cbf, "cbf",
                 {"epsilon", "gain_connectivity", "alpha_connectivity", "gain_safety",
                  "gain_local", "d_min", "safety_activation_radius", "constraints"});
  scenario.cbf.epsilon = get_double(*cbf, "cbf", "epsilon");
  scenario.cbf.gain_connectivity = get_double_or(*cbf, "cbf", "gain_connectivity", 1.0);
  const std::string alpha = [&] {
    const json* j = find(*cbf, "alpha_connectivity");
    if (!j) return std::string("linear");
    if (!j->is_string()) fail("cbf.alpha_connectivity", "expected a string");
    return j->get<std::string>();
  }();
  if (alpha == "linear") {
    scenario.cbf.alpha_connectivity = AlphaKind::linear;
  } else if (alpha == "cubic") {
    scenario.cbf.alpha_connectivity = AlphaKind::cubic;
  } else {
    fail("cbf.alpha_connectivity", "expected linear or cubic");
  }
  scenario.cbf.gain_safety = get_double_or(*cbf, "cbf", "gain_safety", 1.0);
  scenario.cbf.gain_local = get_double_or(*cbf, "cbf", "gain_local", 1.0);
  scenario.cbf.d_min = get_double_or(*cbf, "cbf", "d_min", 1.5);
  scenario.cbf.safety_activation_radius = get_double_or(
      *cbf, "cbf", "safety_activation_radius", 3.0 * scenario.cbf.d_min);
  const json* flags = find(*cbf, "constraints");
  if (flags) {
    expect_object(*flags, "cbf.constraints");
    reject_unknown(*flags, "cbf.constraints", {"connectivity", "safety", "local_link"});
    scenario.constraints.connectivity =
        get_bool_or(*flags, "cbf.constraints", "connectivity", true);
    scenario.constraints.safety = get_bool_or(*flags, "cbf.constraints", "safety", true);
    scenario.constraints.local_link =
        get_bool_or(*flags, "cbf.constraints", "local_link", false);
  }

  const json* controller = find(root, "controller");
  if (!controller) fail("controller", "missing required section");
  expect_object(*controller, "controller");
  reject_unknown(*controller, "controller", {"type", "gain", "resolution", "density"});
  const std::string type = get_string(*controller, "controller", "type");
  scenario.controller.gain = get_double_or(*controller, "controller", "gain", 1.0);
  if (type == "consensus") {
    scenario.controller.type = ControllerSpec::Type::consensus;
  } else if (type == "radial") {
    scenario.controller.type = ControllerSpec::Type::radial;
  } else if (type == "coverage") {
    scenario.controller.type = ControllerSpec::Type::coverage;
  } else {
    fail("controller.type", "expected consensus, radial or coverage");
  }
  if (scenario.controller.type == ControllerSpec::Type::coverage) {
    scenario.controller.resolution =
        get_int_or(*controller, "controller", "resolution", 64);
    const json* density = find(*controller, "density");
    if (!density) fail("controller.density", "missing required key for coverage");
    scenario.controller.density = parse_density(*density, "controller.density");
  } else {
    if (find(*controller, "resolution")) {
      fail("controller.resolution", "only valid for the coverage controller");
    }
    if (find(*controller, "density")) {
      fail("controller.density", "only valid for the coverage controller");
    }
  }

  const json* sim = find(root, "sim");
  if (!sim) fail("sim", "missing required section");
  expect_object(*sim, "sim");
  reject_unknown(*sim, "sim", {"dt", "horizon"});
  scenario.dt = get_double_or(*sim, "sim", "dt", 0.01);
  scenario.horizon = get_double(*sim, "sim", "horizon");

  scenario.validate();
  return scenario;
}

ScenarioConfig parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read scenario file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str(), path.string());
}

nlohmann::ordered_json scenario_to_json(const ScenarioConfig& scenario) {
  ordered_json robots;
  robots["count"] = scenario.robot_count;
  robots["dimension"] = scenario.dimension;
  if (scenario.initial_positions) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < scenario.initial_positions->rows(); ++i) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index k = 0; k < scenario.initial_positions->cols(); ++k) {
        row.push_back((*scenario.initial_positions)(i, k));
      }
      rows.push_back(std::move(row));
    }
    robots["initial_positions"] = std::move(rows);
  } else if (scenario.spawn) {
    ordered_json region;
    region["low"] = std::vector<double>(scenario.spawn->region.low.begin(),
                                        scenario.spawn->region.low.end());
    region["high"] = std::vector<double>(scenario.spawn->region.high.begin(),
                                         scenario.spawn->region.high.end());
    robots["spawn"] = {{"seed", scenario.spawn->seed}, {"region", std::move(region)}};
  }

  ordered_json density;
  if (scenario.controller.type == ControllerSpec::Type::coverage) {
    const DensityField& field = scenario.controller.density;
    density["kind"] =
        field.kind == DensityField::Kind::uniform ? "uniform" : "gaussian_mixture";
    ordered_json domain;
    domain["low"] =
        std::vector<double>(field.domain.low.begin(), field.domain.low.end());
    domain["high"] =
        std::vector<double>(field.domain.high.begin(), field.domain.high.end());
    density["domain"] = std::move(domain);
    if (field.kind == DensityField::Kind::gaussian_mixture) {
      ordered_json components = ordered_json::array();
      for (const GaussianComponent& c : field.components) {
        components.push_back({{"center", {c.center(0), c.center(1)}},
                              {"scale", c.scale},
                              {"amplitude", c.amplitude}});
      }
      density["components"] = std::move(components);
    }
  }

  ordered_json controller;
  switch (scenario.controller.type) {
    case ControllerSpec::Type::consensus:
      controller["type"] = "consensus";
      break;
    case ControllerSpec::Type::radial:
      controller["type"] = "radial";
      break;
    case ControllerSpec::Type::coverage:
      controller["type"] = "coverage";
      break;
  }
  controller["gain"] = scenario.controller.gain;
  if (scenario.controller.type == ControllerSpec::Type::coverage) {
    controller["resolution"] = scenario.controller.resolution;
    controller["density"] = std::move(density);
  }

  ordered_json j;
  j["version"] = 1;
  j["robots"] = std::move(robots);
  j["graph"] = {{"comm_radius", scenario.graph.comm_radius}, {"sigma", scenario.graph.sigma}};
  j["cbf"] = {
      {"epsilon", scenario.cbf.epsilon},
      {"gain_connectivity", scenario.cbf.gain_connectivity},
      {"alpha_connectivity",
       scenario.cbf.alpha_connectivity == AlphaKind::linear ? "linear" : "cubic"},
      {"gain_safety", scenario.cbf.gain_safety},
      {"gain_local", scenario.cbf.gain_local},
      {"d_min", scenario.cbf.d_min},
      {"safety_activation_radius", scenario.cbf.effective_activation_radius()},
      {"constraints",
       {{"connectivity", scenario.constraints.connectivity},
        {"safety", scenario.constraints.safety},
        {"local_link", scenario.constraints.local_link}}}};
  j["controller"] = std::move(controller);
  j["sim"] = {{"dt", scenario.dt}, {"horizon", scenario.horizon}};
  return j;
}

std::string format_metrics_csv(const TrajectoryLog& log) {
  std::string out = "t,lambda2,min_dist,h_conn,h_safety_min,H_cost,deformation\n";
  for (const StepRecord& r : log.records) {
    out += fmt9(r.t) + ',' + fmt9(r.lambda2) + ',' + fmt9(r.min_distance) + ',' +
           fmt9(r.h_connectivity) + ',' + fmt9(r.h_safety_min) + ',' + fmt9(r.locational) +
           ',' + fmt9(r.deformation) + '\n';
  }
  return out;
}

std::string format_positions_csv(const TrajectoryLog& log) {
  if (log.records.empty()) return "t\n";
  const auto& first = log.records.front().positions;
  std::string out = "t";
  for (Eigen::Index i = 0; i < first.rows(); ++i) {
    for (Eigen::Index k = 0; k < first.cols(); ++k) {
      out += ",x_" + std::to_string(i + 1) + "_" + std::to_string(k + 1);
    }
  }
  out += '\n';
  for (const StepRecord& r : log.records) {
    out += fmt9(r.t);
    for (Eigen::Index i = 0; i < r.positions.rows(); ++i) {
      for (Eigen::Index k = 0; k < r.positions.cols(); ++k) {
        out += ',' + fmt9(r.positions(i, k));
      }
    }
    out += '\n';
  }
  return out;
}

void write_outputs(const TrajectoryLog& log, const ScenarioConfig& scenario,
                   const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " +
                        ec.message());
  atomic_write(out_dir / "metrics.csv", format_metrics_csv(log));
  atomic_write(out_dir / "positions.csv", format_positions_csv(log));
  atomic_write(out_dir / "resolved_config.scenario", scenario_to_json(scenario).dump(2) + "\n");
  if (!log.completed) {
    atomic_write(out_dir / "error.txt", log.error + "\n");
  }
}

}  // namespace conncbf
