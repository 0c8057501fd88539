#include "conncbf/cbf_qp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

namespace conncbf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// A constraint counts as violated only beyond this slack.
constexpr double kViolationTol = 1e-10;
// Rows whose component orthogonal to the working set is this small (relative,
// squared) are treated as linearly dependent on it.
constexpr double kDependentTol = 1e-20;
constexpr double kZeroRowTol = 1e-12;
// Dual directions below this cannot block a step.
constexpr double kPivotTol = 1e-12;

double alpha_connectivity_value(double h, const CbfParams& params) {
  const double shaped = params.alpha_connectivity == AlphaKind::cubic ? h * h * h : h;
  return params.gain_connectivity * shaped;
}

}  // namespace

void CbfParams::validate(double comm_radius) const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("cbf.epsilon: must be > 0");
  }
  if (!(gain_connectivity > 0.0) || !(gain_safety > 0.0) || !(gain_local > 0.0)) {
    throw ValidationError("cbf gains: all class-K gains must be > 0");
  }
  if (!(d_min > 0.0) || !std::isfinite(d_min)) {
    throw ValidationError("cbf.d_min: must be a positive length");
  }
  if (d_min >= comm_radius) {
    throw ValidationError(
        "cbf.d_min: safety distance must be below the communication radius, otherwise every "
        "link is forbidden");
  }
  if (safety_activation_radius != 0.0 && safety_activation_radius < d_min) {
    throw ValidationError(
        "cbf.safety_activation_radius: must be at least d_min (or 0 for the default)");
  }
}

std::string ConstraintTag::str() const {
  switch (kind) {
    case Kind::connectivity:
      return "connectivity";
    case Kind::safety:
      return "safety(" + std::to_string(i) + "," + std::to_string(j) + ")";
    case Kind::local_link:
      return "local_link(" + std::to_string(i) + "," + std::to_string(j) + ")";
    case Kind::custom:
      return "custom(" + std::to_string(i) + ")";
  }
  return "unknown";
}

double connectivity_cbf(double lambda2, double epsilon) { return lambda2 - epsilon; }

double clf_value(double lambda2, double epsilon) {
  if (!(lambda2 > 0.0)) {
    throw PreconditionError("clf_value: state outside the connected domain (lambda2 <= 0)");
  }
  return lambda2 >= epsilon ? 0.0 : epsilon - lambda2;
}

LinearConstraint connectivity_constraint(const ConnectivityGradient& gradient,
                                         double lambda2, const CbfParams& params) {
  LinearConstraint constraint;
  constraint.coefficients = gradient.stacked();
  constraint.tag = ConstraintTag::connectivity();
  const double h = connectivity_cbf(lambda2, params.epsilon);
  constraint.bound = -alpha_connectivity_value(h, params);

  if (constraint.coefficients.lpNorm<Eigen::Infinity>() < kZeroRowTol && h < 0.0) {
    // A connected graph always has a nonzero gradient component, so this can
    // only be reached with a broken precondition upstream.
    throw InfeasibleError(
        "connectivity_constraint: gradient vanished while lambda2 < epsilon",
        {constraint.tag.str()});
  }
  return constraint;
}

std::vector<LinearConstraint> safety_constraints(const Configuration& config,
                                                 const CbfParams& params) {
  const int n = config.dimension();
  const int count = config.count();
  const double activation = params.effective_activation_radius();
  std::vector<LinearConstraint> constraints;
  for (int i = 0; i < count; ++i) {
    for (int j = i + 1; j < count; ++j) {
      const double d = config.distance(i, j);
      if (d >= activation) continue;
      LinearConstraint c;
      c.coefficients = Eigen::VectorXd::Zero(count * n);
      const Eigen::RowVectorXd diff = config.position(i) - config.position(j);
      c.coefficients.segment(i * n, n) = 2.0 * diff.transpose();
      c.coefficients.segment(j * n, n) = -2.0 * diff.transpose();
      c.bound = -params.gain_safety * (d * d - params.d_min * params.d_min);
      c.tag = ConstraintTag::safety(i, j);
      constraints.push_back(std::move(c));
    }
  }
  return constraints;
}

std::vector<LinearConstraint> local_link_constraints(
    const std::vector<std::pair<int, int>>& initial_edges, const Configuration& config,
    const CbfParams& cbf, const GraphParams& graph) {
  const int n = config.dimension();
  const int count = config.count();
  const double r2 = graph.comm_radius * graph.comm_radius;
  std::vector<LinearConstraint> constraints;
  constraints.reserve(initial_edges.size());
  for (const auto& [i, j] : initial_edges) {
    if (i < 0 || j < 0 || i >= count || j >= count || i == j) {
      throw PreconditionError("local_link_constraints: edge index out of range");
    }
    const double d = config.distance(i, j);
    LinearConstraint c;
    c.coefficients = Eigen::VectorXd::Zero(count * n);
    const Eigen::RowVectorXd diff = config.position(i) - config.position(j);
    c.coefficients.segment(i * n, n) = -2.0 * diff.transpose();
    c.coefficients.segment(j * n, n) = 2.0 * diff.transpose();
    c.bound = -cbf.gain_local * (r2 - d * d);
    c.tag = ConstraintTag::local_link(i, j);
    constraints.push_back(std::move(c));
  }
  return constraints;
}

QpSolution solve_cbf_qp(const Eigen::VectorXd& u_des,
                        const std::vector<LinearConstraint>& constraints) {
  const Eigen::Index dim = u_des.size();
  if (!u_des.allFinite()) {
    throw PreconditionError("solve_cbf_qp: non-finite desired input");
  }

  // Zero rows never enter the active-set machinery: they are vacuous when the
  // bound is nonpositive and hopeless otherwise.
  std::vector<int> kept;
  kept.reserve(constraints.size());
  for (int k = 0; k < static_cast<int>(constraints.size()); ++k) {
    const LinearConstraint& c = constraints[k];
    if (c.coefficients.size() != dim) {
      throw PreconditionError("solve_cbf_qp: constraint " + std::to_string(k) +
                              " has mismatched dimension");
    }
    if (!c.coefficients.allFinite() || !std::isfinite(c.bound)) {
      throw PreconditionError("solve_cbf_qp: constraint " + std::to_string(k) +
                              " has non-finite data");
    }
    if (c.coefficients.lpNorm<Eigen::Infinity>() < kZeroRowTol) {
      if (c.bound > kViolationTol) {
        throw InfeasibleError("solve_cbf_qp: empty row demands a positive bound",
                              {c.tag.str()});
      }
      continue;
    }
    kept.push_back(k);
  }

  Eigen::VectorXd u = u_des;
  std::vector<int> active;         // indices into `kept`
  std::vector<double> multiplier;  // parallel to `active`

  auto row = [&](int k) -> const Eigen::VectorXd& { return constraints[kept[k]].coefficients; };
  auto bound = [&](int k) { return constraints[kept[k]].bound; };

  auto infeasible = [&](int pending) -> InfeasibleError {
    std::vector<std::string> tags;
    for (int k : active) tags.push_back(constraints[kept[k]].tag.str());
    tags.push_back(constraints[kept[pending]].tag.str());
    return InfeasibleError("solve_cbf_qp: constraints admit no solution", std::move(tags));
  };

  int guard = 0;
  const int guard_max = 100 * (static_cast<int>(kept.size()) + 4);
  while (true) {
    // Most violated inactive constraint; ties break toward the lowest index.
    int pending = -1;
    double worst = kViolationTol;
    for (int k = 0; k < static_cast<int>(kept.size()); ++k) {
      bool is_active = false;
      for (int a : active) {
        if (a == k) {
          is_active = true;
          break;
        }
      }
      if (is_active) continue;
      const double violation = bound(k) - row(k).dot(u);
      if (violation > worst) {
        worst = violation;
        pending = k;
      }
    }
    if (pending < 0) break;

    // Bring `pending` into the working set, stepping in the primal direction
    // orthogonal to the current rows and retiring actives whose multipliers
    // would turn negative.
    double pending_multiplier = 0.0;
    while (true) {
      if (++guard > guard_max) {
        throw NumericalError("solve_cbf_qp: active-set iteration limit exceeded");
      }
      const Eigen::VectorXd& a_p = row(pending);
      const int q = static_cast<int>(active.size());

      Eigen::VectorXd dual_dir(q);
      Eigen::VectorXd z;
      if (q == 0) {
        z = a_p;
      } else {
        Eigen::MatrixXd working(q, dim);
        for (int k = 0; k < q; ++k) working.row(k) = row(active[k]).transpose();
        const Eigen::MatrixXd gram = working * working.transpose();
        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success) {
          throw NumericalError("solve_cbf_qp: working-set Gram factorization failed");
        }
        dual_dir = llt.solve(working * a_p);
        z = a_p - working.transpose() * dual_dir;
      }

      const double z2 = z.squaredNorm();
      const bool dependent = z2 <= kDependentTol * a_p.squaredNorm();
      const double slack = a_p.dot(u) - bound(pending);  // <= 0 while violated

      const double t_full = dependent ? kInf : std::max(0.0, -slack / z2);
      double t_dual = kInf;
      int drop = -1;
      for (int k = 0; k < q; ++k) {
        if (dual_dir(k) > kPivotTol) {
          const double t = multiplier[k] / dual_dir(k);
          if (t < t_dual) {
            t_dual = t;
            drop = k;
          }
        }
      }

      const double t = std::min(t_full, t_dual);
      if (t == kInf) {
        throw infeasible(pending);
      }

      if (!dependent && t > 0.0) u += t * z;
      for (int k = 0; k < q; ++k) multiplier[k] -= t * dual_dir(k);
      pending_multiplier += t;

      if (t_full <= t_dual) {
        active.push_back(pending);
        multiplier.push_back(pending_multiplier);
        break;
      }
      active.erase(active.begin() + drop);
      multiplier.erase(multiplier.begin() + drop);
    }
  }

  // The method should leave every row satisfied; anything else is a numerical
  // breakdown worth reporting rather than returning silently.
  for (int k : kept) {
    const LinearConstraint& c = constraints[k];
    if (c.coefficients.dot(u) < c.bound - kFeasibilityTol) {
      throw NumericalError("solve_cbf_qp: solution violates constraint " + c.tag.str());
    }
  }

  QpSolution solution;
  solution.u = std::move(u);
  for (int k : active) {
    solution.active_set.push_back(constraints[kept[k]].tag);
    solution.active_indices.push_back(kept[k]);
  }
  solution.deformation = (solution.u - u_des).norm();
  return solution;
}

}  // namespace conncbf
