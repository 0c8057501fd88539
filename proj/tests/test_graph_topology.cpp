#include <doctest.h>

#include <cmath>
#include <random>

#include "conncbf/graph_topology.hpp"
#include "oracles.hpp"

using namespace conncbf;

TEST_SUITE_BEGIN("graph_topology");

TEST_CASE("edge weight boundary and normalization") {
  const GraphParams params = GraphParams::make(2.0);
  CHECK(edge_weight(params.comm_radius, params) == doctest::Approx(0.0));
  CHECK(edge_weight(2.0 * params.comm_radius, params) == 0.0);
  // sigma = R^4 / ln 2 puts the zero-distance weight exactly at one.
  CHECK(edge_weight(0.0, params) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(edge_weight(-0.1, params), PreconditionError);
}

TEST_CASE("edge weight is continuous and monotonically decreasing on (0, R]") {
  const GraphParams params = GraphParams::make(3.0);
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    double d1 = oracles::uniform(rng, 1e-3, params.comm_radius);
    double d2 = oracles::uniform(rng, 1e-3, params.comm_radius);
    if (d1 > d2) std::swap(d1, d2);
    if (d1 == d2) continue;
    CHECK(edge_weight(d1, params) > edge_weight(d2, params));
  }
  // continuity at the range boundary: both branches give zero
  CHECK(edge_weight(std::nextafter(params.comm_radius, 0.0), params) ==
        doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("distance derivative matches a central finite difference") {
  const GraphParams params = GraphParams::make(2.0);
  const double d = params.comm_radius / 2.0;
  const double h = 1e-6;
  const double fd = (edge_weight(d + h, params) - edge_weight(d - h, params)) / (2.0 * h);
  const double analytic = edge_weight_distance_derivative(d, params);
  CHECK(analytic == doctest::Approx(fd).epsilon(1e-6));
  CHECK(analytic < 0.0);

  CHECK(edge_weight_distance_derivative(params.comm_radius, params) == 0.0);
  CHECK(edge_weight_distance_derivative(0.999 * params.comm_radius, params) < 0.0);
  CHECK_THROWS_AS(edge_weight_distance_derivative(0.0, params), PreconditionError);
}

TEST_CASE("two robots within range: lambda2 = 2 a") {
  const GraphParams params = GraphParams::make(2.0);
  Eigen::MatrixXd positions(2, 2);
  positions << 0.0, 0.0, 1.3, 0.0;
  const Configuration config(positions);
  const SpectralGraph graph = build_spectral_graph(config, params);
  const double a = edge_weight(1.3, params);
  CHECK(graph.lambda2 == doctest::Approx(2.0 * a).epsilon(1e-12));
  CHECK(std::isinf(graph.eigengap));
}

TEST_CASE("forced unit weights on K3 give lambda2 = N") {
  Eigen::MatrixXd weights = Eigen::MatrixXd::Ones(3, 3);
  weights.diagonal().setZero();
  const SpectralGraph graph = spectral_from_weights(weights);
  CHECK(graph.lambda2 == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("robots out of range are disconnected: lambda2 = 0") {
  const GraphParams params = GraphParams::make(2.0);
  Eigen::MatrixXd positions(2, 2);
  positions << 0.0, 0.0, 5.0, 0.0;
  const SpectralGraph graph = build_spectral_graph(Configuration(positions), params);
  CHECK(graph.lambda2 == 0.0);
}

TEST_CASE("coincident robots are rejected") {
  const GraphParams params = GraphParams::make(2.0);
  Eigen::MatrixXd positions(3, 2);
  positions << 0.0, 0.0, 1.0, 0.0, 0.0, 0.0;
  CHECK_THROWS_AS(build_spectral_graph(Configuration(positions), params), PreconditionError);
}

TEST_CASE("Laplacian invariants over random configurations") {
  const GraphParams params = GraphParams::make(2.5);
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const bool force_disconnected = trial % 2 == 1;
    const int count = 3 + trial % 6;
    Configuration config = oracles::random_connected_config(rng, count, params.comm_radius);
    if (force_disconnected) {
      Eigen::MatrixXd positions = config.positions();
      // shift half the group far out of range
      for (int i = 0; i < count / 2 + 1; ++i) positions.row(i).array() += 50.0;
      config = Configuration(positions);
    }
    const SpectralGraph graph = build_spectral_graph(config, params);

    CHECK(graph.laplacian.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((graph.laplacian - graph.laplacian.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(graph.laplacian);
    CHECK(solver.eigenvalues()(0) >= -1e-9);
    CHECK(graph.weights.minCoeff() >= 0.0);
    CHECK(graph.weights.maxCoeff() <= 1.0 + 1e-12);
    CHECK(std::abs(graph.fiedler.norm() - 1.0) <= 1e-9);
    CHECK(std::abs(graph.fiedler.sum()) <= 1e-7);  // orthogonal to the ones vector

    const bool connected = oracles::bfs_connected(config.positions(), params.comm_radius);
    if (connected) {
      CHECK(graph.lambda2 > 1e-9);
    } else {
      CHECK(graph.lambda2 <= 1e-9);
    }
  }
}

TEST_CASE("analytic gradient matches finite differences on simple spectra") {
  const GraphParams params = GraphParams::make(2.0);
  std::mt19937 rng(23);
  const Configuration config = oracles::random_connected_simple_config(rng, 5, params);
  const SpectralGraph graph = build_spectral_graph(config, params);
  const ConnectivityGradient gradient = connectivity_gradient(config, graph, params);
  CHECK_FALSE(gradient.degenerate_spectrum);

  const Eigen::MatrixXd fd = oracles::finite_difference_lambda2_gradient(config, params);
  const double scale = std::max(fd.norm(), 1e-12);
  CHECK((gradient.beta - fd).norm() / scale <= 1e-4);
}

TEST_CASE("gradient never vanishes everywhere on a connected graph") {
  const GraphParams params = GraphParams::make(2.0);
  std::mt19937 rng(37);
  for (int trial = 0; trial < 25; ++trial) {
    const Configuration config =
        oracles::random_connected_simple_config(rng, 3 + trial % 5, params);
    const SpectralGraph graph = build_spectral_graph(config, params);
    const ConnectivityGradient gradient = connectivity_gradient(config, graph, params);
    CHECK(gradient.beta.rowwise().norm().maxCoeff() > 1e-12);
  }
}

TEST_CASE("isolated robot has a zero gradient block") {
  const GraphParams params = GraphParams::make(2.0);
  Eigen::MatrixXd positions(4, 2);
  positions << 0.0, 0.0, 1.0, 0.2, 0.4, 1.1, 40.0, 40.0;  // robot 3 alone
  const Configuration config(positions);
  const SpectralGraph graph = build_spectral_graph(config, params);
  const ConnectivityGradient gradient = connectivity_gradient(config, graph, params);
  CHECK(gradient.beta.row(3).norm() == 0.0);
}

TEST_CASE("degenerate eigengap is flagged but still returns a gradient") {
  // a symmetric square has a repeated lambda2
  const GraphParams params = GraphParams::make(2.0);
  Eigen::MatrixXd positions(4, 2);
  positions << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
  const Configuration config(positions);
  const SpectralGraph graph = build_spectral_graph(config, params);
  CHECK(graph.eigengap < 1e-6);
  const ConnectivityGradient gradient = connectivity_gradient(config, graph, params);
  CHECK(gradient.degenerate_spectrum);
  CHECK(gradient.beta.allFinite());
}

TEST_CASE("graph edges enumerate positive weights") {
  const GraphParams params = GraphParams::make(2.0);
  Eigen::MatrixXd positions(3, 2);
  positions << 0.0, 0.0, 1.0, 0.0, 10.0, 0.0;
  const SpectralGraph graph = build_spectral_graph(Configuration(positions), params);
  const auto edges = graph_edges(graph);
  REQUIRE(edges.size() == 1);
  CHECK(edges[0] == std::pair<int, int>(0, 1));
}

TEST_SUITE_END();
