#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conncbf/cbf_qp.hpp"
#include "conncbf/controllers.hpp"
#include "conncbf/graph_topology.hpp"
#include "conncbf/types.hpp"

namespace conncbf {

struct ConstraintFlags {
  bool connectivity = true;
  bool safety = true;
  bool local_link = false;
};

struct ControllerSpec {
  enum class Type { consensus, radial, coverage };

  Type type = Type::consensus;
  double gain = 1.0;
  DensityField density;  // coverage only
  int resolution = 64;   // coverage only
};

/// Random initial placement: uniform in the region, resampled until the
/// graph is connected and all pairwise distances exceed d_min.
struct SpawnSpec {
  std::uint64_t seed = 0;
  Rect region;
};

/// Complete description of one experiment.
struct ScenarioConfig {
  int robot_count = 0;
  int dimension = 2;
  std::optional<Eigen::MatrixXd> initial_positions;  // N x n
  std::optional<SpawnSpec> spawn;
  GraphParams graph;
  CbfParams cbf;
  ConstraintFlags constraints;
  ControllerSpec controller;
  double dt = 0.01;      // seconds
  double horizon = 20.0; // seconds

  void validate() const;
  int step_count() const;
};

/// One row of the trajectory log. The metrics describe the state at time t;
/// u_des/u/active_set/deformation describe the input applied over the step
/// that ended at t (zero in the initial record).
struct StepRecord {
  double t = 0.0;
  Eigen::MatrixXd positions;
  Eigen::VectorXd u_des;
  Eigen::VectorXd u;
  double lambda2 = 0.0;
  double min_distance = 0.0;
  double h_connectivity = 0.0;
  double h_safety_min = 0.0;
  double h_local_min = 0.0;  // NaN when the initial graph had no edges
  double locational = 0.0;   // NaN unless the coverage controller runs
  double deformation = 0.0;
  std::vector<ConstraintTag> active_set;
  bool degenerate_spectrum = false;
};

struct TrajectoryLog {
  std::vector<StepRecord> records;
  bool completed = true;
  std::string error;      // set when a step failed
  int failed_step = -1;   // zero-based index of the failed step
};

using EdgeList = std::vector<std::pair<int, int>>;

struct StepOutcome {
  Configuration next;
  StepRecord record;  // metrics of `next`, controls of this step; t left at 0
};

/// Draws positions for a spawn spec. Deterministic in the seed. Throws
/// ValidationError when no valid placement is found within bounded retries.
Configuration spawn_positions(const SpawnSpec& spawn, int robot_count, int dimension,
                              const GraphParams& graph, double d_min);

/// Explicit initial positions or the spawned ones.
Configuration resolve_initial(const ScenarioConfig& scenario);

/// Metrics snapshot of a state (controls left zero).
StepRecord snapshot(const Configuration& config, const ScenarioConfig& scenario,
                    const EdgeList& initial_edges, double t);

/// One closed-loop step: graph, gradient, enabled constraints, desired input,
/// QP filter, explicit Euler update. Errors from any stage propagate.
StepOutcome step(const Configuration& config, const ScenarioConfig& scenario,
                 const EdgeList& initial_edges);

/// Runs ceil(horizon / dt) steps. Refuses to start a connectivity-constrained
/// scenario from a disconnected state. Step failures abort the run and leave
/// a partial log with the error and the failed step index.
TrajectoryLog run_scenario(const ScenarioConfig& scenario);

}  // namespace conncbf
