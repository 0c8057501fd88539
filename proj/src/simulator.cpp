#include "conncbf/simulator.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace conncbf {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Platform-stable uniform double in [0, 1).
double next_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

bool connected_within_radius(const Eigen::MatrixXd& positions, double radius) {
  const int count = static_cast<int>(positions.rows());
  std::vector<char> seen(count, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int j = 0; j < count; ++j) {
      if (seen[j] || (positions.row(i) - positions.row(j)).norm() >= radius) continue;
      seen[j] = 1;
      ++reached;
      stack.push_back(j);
    }
  }
  return reached == count;
}

Eigen::VectorXd desired_input(const Configuration& config, const SpectralGraph& graph,
                              const ScenarioConfig& scenario) {
  switch (scenario.controller.type) {
    case ControllerSpec::Type::consensus:
      return consensus_input(config, graph, scenario.controller.gain);
    case ControllerSpec::Type::radial:
      return radial_disconnecting_inputs(config, scenario.controller.gain);
    case ControllerSpec::Type::coverage: {
      const VoronoiPartition partition = voronoi_partition(
          config, scenario.controller.density, scenario.controller.resolution);
      return lloyd_input(config, partition, scenario.controller.gain);
    }
  }
  throw PreconditionError("desired_input: unknown controller type");
}

std::vector<LinearConstraint> assemble_constraints(const Configuration& config,
                                                   const SpectralGraph& graph,
                                                   const ScenarioConfig& scenario,
                                                   const EdgeList& initial_edges) {
  std::vector<LinearConstraint> constraints;
  if (scenario.constraints.connectivity) {
    const ConnectivityGradient gradient =
        connectivity_gradient(config, graph, scenario.graph);
    constraints.push_back(connectivity_constraint(gradient, graph.lambda2, scenario.cbf));
  }
  if (scenario.constraints.safety) {
    for (LinearConstraint& c : safety_constraints(config, scenario.cbf)) {
      constraints.push_back(std::move(c));
    }
  }
  if (scenario.constraints.local_link) {
    for (LinearConstraint& c :
         local_link_constraints(initial_edges, config, scenario.cbf, scenario.graph)) {
      constraints.push_back(std::move(c));
    }
  }
  // Zero rows with nonpositive bounds are vacuous; drop them here so the
  // stack honors the nonzero-coefficient invariant.
  std::vector<LinearConstraint> kept;
  kept.reserve(constraints.size());
  for (LinearConstraint& c : constraints) {
    if (c.coefficients.lpNorm<Eigen::Infinity>() < 1e-12 && c.bound <= 0.0) continue;
    kept.push_back(std::move(c));
  }
  return kept;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (robot_count < 2) throw ValidationError("robots.count: must be at least 2");
  if (dimension < 1 || dimension > 3) {
    throw ValidationError("robots.dimension: must be 1, 2 or 3");
  }
  graph.validate();
  cbf.validate(graph.comm_radius);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("sim.dt: must be > 0");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw ValidationError("sim.horizon: must be >= 0");
  }
  if (initial_positions.has_value() == spawn.has_value()) {
    throw ValidationError(
        "robots: exactly one of initial_positions and spawn must be given");
  }
  if (initial_positions) {
    if (initial_positions->rows() != robot_count || initial_positions->cols() != dimension) {
      throw ValidationError("robots.initial_positions: shape must be count x dimension");
    }
    if (!initial_positions->allFinite()) {
      throw ValidationError("robots.initial_positions: non-finite coordinate");
    }
  }
  if (spawn) {
    spawn->region.validate();
    if (spawn->region.dimension() != dimension) {
      throw ValidationError("robots.spawn.region: dimension mismatch");
    }
  }
  if (!(controller.gain > 0.0)) throw ValidationError("controller.gain: must be > 0");
  switch (controller.type) {
    case ControllerSpec::Type::consensus:
      break;
    case ControllerSpec::Type::radial:
      if (dimension != 2) {
        throw ValidationError("controller.type: radial dispersal requires dimension 2");
      }
      break;
    case ControllerSpec::Type::coverage:
      if (dimension != 2) {
        throw ValidationError("controller.type: coverage requires dimension 2");
      }
      if (controller.resolution < 16) {
        throw ValidationError("controller.resolution: must be at least 16");
      }
      controller.density.validate();
      break;
  }
}

int ScenarioConfig::step_count() const {
  // Tolerant ceiling so horizons that are integer multiples of dt do not
  // gain a step to roundoff.
  return static_cast<int>(std::ceil(horizon / dt - 1e-9));
}

Configuration spawn_positions(const SpawnSpec& spawn, int robot_count, int dimension,
                              const GraphParams& graph, double d_min) {
  spawn.region.validate();
  if (spawn.region.dimension() != dimension) {
    throw ValidationError("spawn.region: dimension mismatch");
  }
  std::mt19937_64 rng(spawn.seed);
  constexpr int kConfigAttempts = 200;
  constexpr int kPlacementTries = 500;

  for (int attempt = 0; attempt < kConfigAttempts; ++attempt) {
    Eigen::MatrixXd positions(robot_count, dimension);
    int placed = 0;
    while (placed < robot_count) {
      bool ok = false;
      for (int t = 0; t < kPlacementTries && !ok; ++t) {
        Eigen::RowVectorXd p(dimension);
        for (int k = 0; k < dimension; ++k) {
          p(k) = spawn.region.low(k) +
                 next_uniform(rng) * (spawn.region.high(k) - spawn.region.low(k));
        }
        ok = true;
        for (int i = 0; i < placed; ++i) {
          if ((positions.row(i) - p).norm() <= d_min) {
            ok = false;
            break;
          }
        }
        if (ok) positions.row(placed) = p;
      }
      if (!ok) break;
      ++placed;
    }
    if (placed < robot_count) continue;
    if (connected_within_radius(positions, graph.comm_radius)) {
      return Configuration(std::move(positions));
    }
  }
  throw ValidationError(
      "spawn: no connected placement with the required spacing found after " +
      std::to_string(kConfigAttempts) + " attempts");
}

Configuration resolve_initial(const ScenarioConfig& scenario) {
  if (scenario.initial_positions) {
    return Configuration(*scenario.initial_positions);
  }
  if (scenario.spawn) {
    return spawn_positions(*scenario.spawn, scenario.robot_count, scenario.dimension,
                           scenario.graph, scenario.cbf.d_min);
  }
  throw ValidationError("robots: no initial positions and no spawn spec");
}

StepRecord snapshot(const Configuration& config, const ScenarioConfig& scenario,
                    const EdgeList& initial_edges, double t) {
  const SpectralGraph graph = build_spectral_graph(config, scenario.graph);
  StepRecord record;
  record.t = t;
  record.positions = config.positions();
  record.u_des = Eigen::VectorXd::Zero(config.count() * config.dimension());
  record.u = record.u_des;
  record.lambda2 = graph.lambda2;
  record.min_distance = config.min_pairwise_distance();
  record.h_connectivity = connectivity_cbf(graph.lambda2, scenario.cbf.epsilon);
  record.degenerate_spectrum = graph.eigengap < kDegenerateEigengap;

  double h_safety = std::numeric_limits<double>::infinity();
  for (int i = 0; i < config.count(); ++i) {
    for (int j = i + 1; j < config.count(); ++j) {
      const double d = config.distance(i, j);
      h_safety = std::min(h_safety, d * d - scenario.cbf.d_min * scenario.cbf.d_min);
    }
  }
  record.h_safety_min = h_safety;

  if (initial_edges.empty()) {
    record.h_local_min = kNan;
  } else {
    const double r2 = scenario.graph.comm_radius * scenario.graph.comm_radius;
    double h_local = std::numeric_limits<double>::infinity();
    for (const auto& [i, j] : initial_edges) {
      const double d = config.distance(i, j);
      h_local = std::min(h_local, r2 - d * d);
    }
    record.h_local_min = h_local;
  }

  if (scenario.controller.type == ControllerSpec::Type::coverage) {
    const VoronoiPartition partition = voronoi_partition(
        config, scenario.controller.density, scenario.controller.resolution);
    record.locational = locational_cost(config, partition);
  } else {
    record.locational = kNan;
  }
  return record;
}

StepOutcome step(const Configuration& config, const ScenarioConfig& scenario,
                 const EdgeList& initial_edges) {
  const SpectralGraph graph = build_spectral_graph(config, scenario.graph);
  const std::vector<LinearConstraint> constraints =
      assemble_constraints(config, graph, scenario, initial_edges);
  const Eigen::VectorXd u_des = desired_input(config, graph, scenario);
  QpSolution solution = solve_cbf_qp(u_des, constraints);

  Configuration next = Configuration::from_stacked(
      config.stacked() + scenario.dt * solution.u, config.dimension());

  StepOutcome outcome{std::move(next), StepRecord{}};
  outcome.record = snapshot(outcome.next, scenario, initial_edges, 0.0);
  outcome.record.u_des = u_des;
  outcome.record.u = std::move(solution.u);
  outcome.record.active_set = std::move(solution.active_set);
  outcome.record.deformation = solution.deformation;
  return outcome;
}

TrajectoryLog run_scenario(const ScenarioConfig& scenario) {
  scenario.validate();
  Configuration state = resolve_initial(scenario);

  const SpectralGraph initial_graph = build_spectral_graph(state, scenario.graph);
  if (scenario.constraints.connectivity && initial_graph.lambda2 < kEigenvalueTol) {
    throw ValidationError(
        "run_scenario: connectivity maintenance requires a connected initial configuration "
        "(lambda2(x(0)) > 0)");
  }
  const EdgeList initial_edges = graph_edges(initial_graph);

  TrajectoryLog log;
  log.records.push_back(snapshot(state, scenario, initial_edges, 0.0));

  const int steps = scenario.step_count();
  for (int k = 0; k < steps; ++k) {
    try {
      StepOutcome outcome = step(state, scenario, initial_edges);
      state = std::move(outcome.next);
      outcome.record.t = (k + 1) * scenario.dt;
      log.records.push_back(std::move(outcome.record));
    } catch (const Error& e) {
      log.completed = false;
      log.failed_step = k;
      log.error = "step " + std::to_string(k) + ": " + e.what();
      break;
    }
  }
  return log;
}

}  // namespace conncbf
