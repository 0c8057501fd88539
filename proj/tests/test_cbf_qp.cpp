#include <doctest.h>

#include <cmath>
#include <random>

#include "conncbf/cbf_qp.hpp"
#include "oracles.hpp"

using namespace conncbf;

namespace {

LinearConstraint make_constraint(const Eigen::VectorXd& row, double bound, int id) {
  return LinearConstraint{row, bound, ConstraintTag::custom(id)};
}

}  // namespace

TEST_SUITE_BEGIN("cbf_qp");

TEST_CASE("connectivity barrier value") {
  CHECK(connectivity_cbf(0.1, 0.1) == 0.0);
  CHECK(connectivity_cbf(0.3, 0.1) == doctest::Approx(0.2));
  CHECK(connectivity_cbf(0.05, 0.1) == doctest::Approx(-0.05));
}

TEST_CASE("clf value and domain") {
  CHECK(clf_value(0.1, 0.1) == 0.0);
  CHECK(clf_value(0.02, 0.1) == doctest::Approx(0.08));
  CHECK(clf_value(1.0, 0.1) == 0.0);
  CHECK_THROWS_AS(clf_value(0.0, 0.1), PreconditionError);
  CHECK_THROWS_AS(clf_value(-0.2, 0.1), PreconditionError);
}

TEST_CASE("cbf parameter validation") {
  CbfParams params;
  CHECK_NOTHROW(params.validate(6.0));
  CHECK(params.effective_activation_radius() == doctest::Approx(4.5));

  CbfParams bad_eps = params;
  bad_eps.epsilon = 0.0;
  CHECK_THROWS_AS(bad_eps.validate(6.0), ValidationError);

  CbfParams bad_dmin = params;
  bad_dmin.d_min = 6.5;
  CHECK_THROWS_AS(bad_dmin.validate(6.0), ValidationError);
}

TEST_CASE("connectivity constraint bounds") {
  ConnectivityGradient gradient;
  gradient.beta = Eigen::MatrixXd::Zero(2, 2);
  gradient.beta << 0.3, -0.1, -0.3, 0.1;
  CbfParams params;
  params.epsilon = 0.1;

  SUBCASE("boundary of the safe set") {
    const LinearConstraint c = connectivity_constraint(gradient, 0.1, params);
    CHECK(c.bound == 0.0);
    CHECK(c.coefficients.size() == 4);
    CHECK(c.coefficients(0) == doctest::Approx(0.3));
    // u = 0 is admissible on the boundary
    CHECK(c.coefficients.dot(Eigen::VectorXd::Zero(4)) >= c.bound);
  }
  SUBCASE("inside the recovery band") {
    const LinearConstraint c = connectivity_constraint(gradient, 0.05, params);
    CHECK(c.bound == doctest::Approx(0.05));
  }
  SUBCASE("deep inside the safe set the constraint is slack") {
    const LinearConstraint c = connectivity_constraint(gradient, 2.0, params);
    CHECK(c.bound == doctest::Approx(-1.9));
    const Eigen::VectorXd u_des = Eigen::VectorXd::Zero(4);
    const QpSolution sol = solve_cbf_qp(u_des, {c});
    CHECK(sol.u.isApprox(u_des));
    CHECK(sol.active_set.empty());
  }
  SUBCASE("cubic shaping") {
    CbfParams cubic = params;
    cubic.alpha_connectivity = AlphaKind::cubic;
    const LinearConstraint c = connectivity_constraint(gradient, 0.05, cubic);
    CHECK(c.bound == doctest::Approx(0.05 * 0.05 * 0.05));
  }
  SUBCASE("vanished gradient below the threshold is an alarm") {
    ConnectivityGradient zero;
    zero.beta = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(connectivity_constraint(zero, 0.05, params), InfeasibleError);
    // above the threshold the row is vacuous but not alarming
    CHECK_NOTHROW(connectivity_constraint(zero, 0.2, params));
  }
}

TEST_CASE("safety constraint rows") {
  CbfParams params;
  params.d_min = 1.5;
  params.gain_safety = 1.0;

  SUBCASE("boundary pair") {
    Eigen::MatrixXd positions(2, 2);
    positions << 0.0, 0.0, 1.5, 0.0;
    const auto constraints = safety_constraints(Configuration(positions), params);
    REQUIRE(constraints.size() == 1);
    CHECK(constraints[0].bound == doctest::Approx(0.0));
    CHECK(constraints[0].coefficients(0) == doctest::Approx(-3.0));
    CHECK(constraints[0].coefficients(2) == doctest::Approx(3.0));
  }
  SUBCASE("pair at twice the safety distance") {
    Eigen::MatrixXd positions(2, 2);
    positions << 0.0, 0.0, 3.0, 0.0;
    const auto constraints = safety_constraints(Configuration(positions), params);
    REQUIRE(constraints.size() == 1);
    CHECK(constraints[0].bound == doctest::Approx(-3.0 * 1.5 * 1.5));
  }
  SUBCASE("pairs beyond the activation radius are omitted") {
    Eigen::MatrixXd positions(2, 2);
    positions << 0.0, 0.0, 5.0, 0.0;  // beyond 3 * d_min = 4.5
    CHECK(safety_constraints(Configuration(positions), params).empty());
  }
  SUBCASE("row is symmetric under swapping the pair") {
    std::mt19937 rng(3);
    Eigen::MatrixXd positions(2, 2);
    positions << oracles::uniform(rng, -1, 1), oracles::uniform(rng, -1, 1),
        oracles::uniform(rng, 1.5, 2.5), oracles::uniform(rng, -1, 1);
    Eigen::MatrixXd swapped(2, 2);
    swapped.row(0) = positions.row(1);
    swapped.row(1) = positions.row(0);
    const auto a = safety_constraints(Configuration(positions), params);
    const auto b = safety_constraints(Configuration(swapped), params);
    REQUIRE(a.size() == 1);
    REQUIRE(b.size() == 1);
    // same inequality once the blocks are relabelled
    Eigen::VectorXd relabelled(4);
    relabelled << b[0].coefficients.segment(2, 2), b[0].coefficients.segment(0, 2);
    CHECK(a[0].coefficients.isApprox(relabelled, 1e-12));
    CHECK(a[0].bound == doctest::Approx(b[0].bound));
  }
}

TEST_CASE("local link constraint rows") {
  CbfParams cbf;
  cbf.gain_local = 1.0;
  const GraphParams graph = GraphParams::make(2.0);

  SUBCASE("pair at the communication boundary") {
    Eigen::MatrixXd positions(2, 2);
    positions << 0.0, 0.0, 2.0, 0.0;
    const auto constraints =
        local_link_constraints({{0, 1}}, Configuration(positions), cbf, graph);
    REQUIRE(constraints.size() == 1);
    CHECK(constraints[0].bound == doctest::Approx(0.0));
  }
  SUBCASE("pair at half range") {
    Eigen::MatrixXd positions(2, 2);
    positions << 0.0, 0.0, 1.0, 0.0;
    const auto constraints =
        local_link_constraints({{0, 1}}, Configuration(positions), cbf, graph);
    REQUIRE(constraints.size() == 1);
    CHECK(constraints[0].bound == doctest::Approx(-0.75 * 4.0));
  }
  SUBCASE("no initial edges, no rows") {
    Eigen::MatrixXd positions(2, 2);
    positions << 0.0, 0.0, 1.0, 0.0;
    CHECK(local_link_constraints({}, Configuration(positions), cbf, graph).empty());
  }
}

TEST_CASE("qp passthrough and single-constraint projection") {
  SUBCASE("no constraints") {
    Eigen::VectorXd u_des(3);
    u_des << 1.0, -2.0, 0.5;
    const QpSolution sol = solve_cbf_qp(u_des, {});
    CHECK(sol.u.isApprox(u_des));
    CHECK(sol.deformation == 0.0);
  }
  SUBCASE("violated halfspace projects onto its boundary") {
    Eigen::VectorXd a(2);
    a << 1.0, 0.0;
    const QpSolution sol =
        solve_cbf_qp(Eigen::VectorXd::Zero(2), {make_constraint(a, 1.0, 0)});
    CHECK(sol.u(0) == doctest::Approx(1.0));
    CHECK(sol.u(1) == doctest::Approx(0.0));
    REQUIRE(sol.active_set.size() == 1);
    CHECK(sol.deformation == doctest::Approx(1.0));

    // dense grid search over the feasible halfplane agrees
    Eigen::Vector2d best = Eigen::Vector2d::Constant(1e9);
    for (double x = -2.0; x <= 2.0; x += 1e-3) {
      for (double y = -2.0; y <= 2.0; y += 0.05) {
        if (x < 1.0) continue;  // infeasible side
        if (Eigen::Vector2d(x, y).norm() < best.norm()) best = {x, y};
      }
    }
    CHECK((sol.u - best).norm() <= 2e-3);
  }
  SUBCASE("generic single constraint matches the closed form") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd a(4), u_des(4);
      for (int k = 0; k < 4; ++k) {
        a(k) = oracles::uniform(rng, -1, 1);
        u_des(k) = oracles::uniform(rng, -1, 1);
      }
      if (a.norm() < 0.1) continue;
      const double b = a.dot(u_des) + oracles::uniform(rng, 0.1, 1.0);  // violated
      const QpSolution sol = solve_cbf_qp(u_des, {make_constraint(a, b, 0)});
      const Eigen::VectorXd expected = u_des + a * (b - a.dot(u_des)) / a.squaredNorm();
      CHECK((sol.u - expected).norm() <= 1e-9);
    }
  }
}

TEST_CASE("qp matches the enumeration oracle on random instances") {
  std::mt19937 rng(17);
  int infeasible_seen = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int dim = 4;
    const int rows = 3;
    Eigen::VectorXd u_des(dim);
    for (int k = 0; k < dim; ++k) u_des(k) = oracles::uniform(rng, -2, 2);
    std::vector<LinearConstraint> constraints;
    for (int r = 0; r < rows; ++r) {
      Eigen::VectorXd a(dim);
      for (int k = 0; k < dim; ++k) a(k) = oracles::uniform(rng, -1, 1);
      constraints.push_back(make_constraint(a, oracles::uniform(rng, -1, 1), r));
    }
    const auto expected = oracles::qp_enumeration_oracle(u_des, constraints);
    if (!expected) {
      ++infeasible_seen;
      CHECK_THROWS_AS(solve_cbf_qp(u_des, constraints), InfeasibleError);
      continue;
    }
    const QpSolution sol = solve_cbf_qp(u_des, constraints);
    CHECK((sol.u - *expected).norm() <= 1e-6);
  }
  // random 3-row instances in R^4 are almost always feasible
  CHECK(infeasible_seen < 10);
}

TEST_CASE("qp optimality against sampled feasible points and KKT residual") {
  std::mt19937 rng(29);
  const int dim = 5;
  Eigen::VectorXd u_des(dim);
  for (int k = 0; k < dim; ++k) u_des(k) = oracles::uniform(rng, -2, 2);
  std::vector<LinearConstraint> constraints;
  for (int r = 0; r < 4; ++r) {
    Eigen::VectorXd a(dim);
    for (int k = 0; k < dim; ++k) a(k) = oracles::uniform(rng, -1, 1);
    constraints.push_back(make_constraint(a, oracles::uniform(rng, 0.0, 1.5), r));
  }
  const QpSolution sol = solve_cbf_qp(u_des, constraints);

  auto feasible = [&](const Eigen::VectorXd& u) {
    for (const auto& c : constraints) {
      if (c.coefficients.dot(u) < c.bound) return false;
    }
    return true;
  };
  for (const auto& c : constraints) {
    REQUIRE(c.coefficients.dot(sol.u) >= c.bound - 1e-9);
  }

  int sampled = 0;
  while (sampled < 1000) {
    Eigen::VectorXd candidate = sol.u;
    for (int k = 0; k < dim; ++k) candidate(k) += oracles::uniform(rng, -1.5, 1.5);
    if (!feasible(candidate)) continue;
    ++sampled;
    CHECK((sol.u - u_des).norm() <= (candidate - u_des).norm() + 1e-9);
  }

  // the residual must be a nonnegative combination of the active rows
  const Eigen::VectorXd residual = sol.u - u_des;
  if (sol.active_indices.empty()) {
    CHECK(residual.norm() <= 1e-9);
  } else {
    Eigen::MatrixXd active_rows(sol.active_indices.size(), dim);
    for (std::size_t k = 0; k < sol.active_indices.size(); ++k) {
      active_rows.row(static_cast<Eigen::Index>(k)) =
          constraints[sol.active_indices[k]].coefficients;
    }
    const Eigen::VectorXd multipliers =
        active_rows.transpose().colPivHouseholderQr().solve(residual);
    CHECK((active_rows.transpose() * multipliers - residual).norm() <= 1e-6);
    CHECK(multipliers.minCoeff() >= -1e-6);
  }
}

TEST_CASE("the lone connectivity constraint is always feasible below epsilon") {
  const GraphParams graph_params = GraphParams::make(2.0);
  std::mt19937 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const Configuration config =
        oracles::random_connected_simple_config(rng, 3 + trial % 6, graph_params);
    const SpectralGraph graph = build_spectral_graph(config, graph_params);
    CbfParams cbf;
    cbf.epsilon = graph.lambda2 * 1.5;  // state strictly below the target
    const ConnectivityGradient gradient = connectivity_gradient(config, graph, graph_params);
    const LinearConstraint constraint =
        connectivity_constraint(gradient, graph.lambda2, cbf);
    Eigen::VectorXd u_des(config.count() * 2);
    for (Eigen::Index k = 0; k < u_des.size(); ++k) u_des(k) = oracles::uniform(rng, -1, 1);
    const QpSolution sol = solve_cbf_qp(u_des, {constraint});
    CHECK(constraint.coefficients.dot(sol.u) >= constraint.bound - 1e-8);
  }
}

TEST_CASE("constraint row equals the time derivative of lambda2") {
  const GraphParams graph_params = GraphParams::make(2.0);
  std::mt19937 rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const Configuration config = oracles::random_connected_simple_config(rng, 5, graph_params);
    const SpectralGraph graph = build_spectral_graph(config, graph_params);
    const ConnectivityGradient gradient = connectivity_gradient(config, graph, graph_params);
    CbfParams cbf;
    const LinearConstraint constraint =
        connectivity_constraint(gradient, graph.lambda2, cbf);

    Eigen::VectorXd u(config.count() * 2);
    for (Eigen::Index k = 0; k < u.size(); ++k) u(k) = oracles::uniform(rng, -1, 1);

    const double h = 1e-6;
    const Configuration forward =
        Configuration::from_stacked(config.stacked() + h * u, 2);
    const Configuration backward =
        Configuration::from_stacked(config.stacked() - h * u, 2);
    const double fd = (build_spectral_graph(forward, graph_params).lambda2 -
                       build_spectral_graph(backward, graph_params).lambda2) /
                      (2.0 * h);
    const double predicted = constraint.coefficients.dot(u);
    CHECK(std::abs(predicted - fd) <= 1e-4 * std::max(std::abs(fd), 1e-6));
  }
}

TEST_CASE("zero rows are dropped or reported") {
  const Eigen::VectorXd zero_row = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd u_des(3);
  u_des << 1.0, 2.0, 3.0;
  SUBCASE("vacuous row") {
    const QpSolution sol = solve_cbf_qp(u_des, {make_constraint(zero_row, -1.0, 0)});
    CHECK(sol.u.isApprox(u_des));
  }
  SUBCASE("hopeless row") {
    CHECK_THROWS_AS(solve_cbf_qp(u_des, {make_constraint(zero_row, 1.0, 0)}),
                    InfeasibleError);
  }
}

TEST_CASE("conflicting halfspaces report the irreducible tags") {
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 0.0;
  b << -1.0, 0.0;
  std::vector<LinearConstraint> constraints = {make_constraint(a, 1.0, 0),
                                               make_constraint(b, 0.0, 1)};
  try {
    solve_cbf_qp(Eigen::VectorXd::Zero(2), constraints);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(e.constraint_tags().size() >= 2);
  }
}

TEST_SUITE_END();
