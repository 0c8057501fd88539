#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "conncbf/graph_topology.hpp"
#include "conncbf/types.hpp"

namespace conncbf {

// Constraints are considered satisfied down to this slack.
inline constexpr double kFeasibilityTol = 1e-8;

/// Shape of the class-K decay applied to the connectivity barrier.
enum class AlphaKind { linear, cubic };

/// Gains and thresholds for the barrier constraints.
struct CbfParams {
  double epsilon = 0.1;              // desired connectivity floor
  double gain_connectivity = 1.0;    // phi in alpha(h) = phi h (or phi h^3)
  AlphaKind alpha_connectivity = AlphaKind::linear;
  double gain_safety = 1.0;
  double gain_local = 1.0;
  double d_min = 1.5;                // meters
  double safety_activation_radius = 0.0;  // 0 -> defaults to 3 * d_min

  double effective_activation_radius() const {
    return safety_activation_radius > 0.0 ? safety_activation_radius : 3.0 * d_min;
  }
  void validate(double comm_radius) const;
};

/// Provenance of one constraint row.
struct ConstraintTag {
  enum class Kind { connectivity, safety, local_link, custom };

  Kind kind = Kind::custom;
  int i = -1;
  int j = -1;

  static ConstraintTag connectivity() { return {Kind::connectivity, -1, -1}; }
  static ConstraintTag safety(int i, int j) { return {Kind::safety, i, j}; }
  static ConstraintTag local_link(int i, int j) { return {Kind::local_link, i, j}; }
  static ConstraintTag custom(int id) { return {Kind::custom, id, -1}; }

  std::string str() const;
  bool operator==(const ConstraintTag&) const = default;
};

/// One row of the stacked inequality: coefficients . u >= bound.
struct LinearConstraint {
  Eigen::VectorXd coefficients;
  double bound = 0.0;
  ConstraintTag tag;
};

struct QpSolution {
  Eigen::VectorXd u;
  std::vector<ConstraintTag> active_set;  // constraints tight at the solution
  std::vector<int> active_indices;        // their indices in the input list
  double deformation = 0.0;               // ||u - u_des||
};

/// Connectivity barrier h(x) = lambda2 - epsilon.
double connectivity_cbf(double lambda2, double epsilon);

/// Lyapunov companion of the barrier: zero inside the desired set, epsilon -
/// lambda2 between the connected domain and the desired set. Requires
/// lambda2 > 0 (the state must be in the connected domain).
double clf_value(double lambda2, double epsilon);

/// Barrier row beta . u >= -alpha(lambda2 - epsilon). Raises an
/// infeasibility alarm when the gradient vanished while lambda2 < epsilon,
/// which cannot happen on a connected graph and signals a broken
/// precondition upstream.
LinearConstraint connectivity_constraint(const ConnectivityGradient& gradient,
                                         double lambda2, const CbfParams& params);

/// Pairwise collision barriers h = d_ij^2 - d_min^2, one row per unordered
/// pair closer than the activation radius.
std::vector<LinearConstraint> safety_constraints(const Configuration& config,
                                                 const CbfParams& params);

/// Link-preservation baseline h = R^2 - d_ij^2, one row per initial edge.
std::vector<LinearConstraint> local_link_constraints(
    const std::vector<std::pair<int, int>>& initial_edges, const Configuration& config,
    const CbfParams& cbf, const GraphParams& graph);

/// Minimally-invasive filter: the unique minimizer of 1/2 ||u - u_des||^2
/// subject to every row. Dense active-set method for the identity Hessian;
/// deterministic tie-breaking by constraint index. Rows with zero
/// coefficients are dropped when trivially satisfied and reported as
/// infeasible otherwise. Throws InfeasibleError with the conflicting tags
/// when no input can satisfy the stack.
QpSolution solve_cbf_qp(const Eigen::VectorXd& u_des,
                        const std::vector<LinearConstraint>& constraints);

}  // namespace conncbf
