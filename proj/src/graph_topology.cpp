#include "conncbf/graph_topology.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

namespace conncbf {

double edge_weight(double distance, const GraphParams& params) {
  if (distance < 0.0 || !std::isfinite(distance)) {
    throw PreconditionError("edge_weight: distance must be finite and nonnegative");
  }
  if (distance > params.comm_radius) {
    return 0.0;
  }
  const double r2 = params.comm_radius * params.comm_radius;
  const double s = r2 - distance * distance;
  // expm1 keeps precision for the near-range weights, which are tiny.
  return std::expm1(s * s / params.sigma);
}

double edge_weight_distance_derivative(double distance, const GraphParams& params) {
  if (!(distance > 0.0) || !std::isfinite(distance)) {
    throw PreconditionError(
        "edge_weight_distance_derivative: undefined at coincident positions (d <= 0)");
  }
  if (distance >= params.comm_radius) {
    return 0.0;
  }
  const double r2 = params.comm_radius * params.comm_radius;
  const double s = r2 - distance * distance;
  return -(4.0 * distance * s / params.sigma) * std::exp(s * s / params.sigma);
}

SpectralGraph spectral_from_weights(Eigen::MatrixXd weights) {
  const auto n = weights.rows();
  if (n < 2 || weights.cols() != n) {
    throw PreconditionError("spectral_from_weights: weight matrix must be square, N >= 2");
  }
  if (!weights.allFinite()) {
    throw PreconditionError("spectral_from_weights: non-finite weight");
  }
  if ((weights - weights.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw PreconditionError("spectral_from_weights: weight matrix must be symmetric");
  }
  if (weights.diagonal().cwiseAbs().maxCoeff() > 0.0) {
    throw PreconditionError("spectral_from_weights: diagonal must be zero");
  }
  if (weights.minCoeff() < 0.0 || weights.maxCoeff() > 1.0 + 1e-9) {
    throw PreconditionError("spectral_from_weights: weights must lie in [0, 1]");
  }

  SpectralGraph graph;
  graph.laplacian = -weights;
  graph.laplacian.diagonal() += weights.rowwise().sum();
  graph.weights = std::move(weights);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(graph.laplacian);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("spectral_from_weights: eigendecomposition did not converge (N = " +
                         std::to_string(n) + ")");
  }

  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  double lambda2 = values(1);
  if (lambda2 < 0.0) {
    if (lambda2 < -kEigenvalueTol) {
      throw NumericalError("spectral_from_weights: Laplacian not PSD, lambda2 = " +
                           std::to_string(lambda2));
    }
    lambda2 = 0.0;
  }
  graph.lambda2 = lambda2;
  graph.eigengap =
      n > 2 ? values(2) - values(1) : std::numeric_limits<double>::infinity();

  // On disconnected graphs the null space has dimension >= 2 and the solver
  // is free to return a kernel basis that mixes the ones vector in. Project
  // it out so the Fiedler vector is always orthogonal to ones; the projected
  // vector stays inside the lambda2 eigenspace.
  const Eigen::VectorXd ones_unit =
      Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Eigen::VectorXd fiedler = solver.eigenvectors().col(1);
  fiedler -= ones_unit.dot(fiedler) * ones_unit;
  if (fiedler.norm() < 0.5) {
    // The second basis vector was nearly the ones direction; the first one of
    // the orthonormal pair then carries the component we want.
    fiedler = solver.eigenvectors().col(0);
    fiedler -= ones_unit.dot(fiedler) * ones_unit;
  }
  graph.fiedler = fiedler.normalized();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (std::abs(graph.fiedler(k)) > 1e-12) {
      if (graph.fiedler(k) < 0.0) graph.fiedler = -graph.fiedler;
      break;
    }
  }
  return graph;
}

SpectralGraph build_spectral_graph(const Configuration& config, const GraphParams& params) {
  const int n = config.count();
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = config.distance(i, j);
      if (d < kCoincidenceTol) {
        throw PreconditionError("build_spectral_graph: robots " + std::to_string(i) + " and " +
                                std::to_string(j) + " coincide");
      }
      const double w = edge_weight(d, params);
      weights(i, j) = w;
      weights(j, i) = w;
    }
  }
  return spectral_from_weights(std::move(weights));
}

Eigen::VectorXd ConnectivityGradient::stacked() const {
  Eigen::VectorXd b(beta.size());
  for (Eigen::Index i = 0; i < beta.rows(); ++i) {
    b.segment(i * beta.cols(), beta.cols()) = beta.row(i).transpose();
  }
  return b;
}

ConnectivityGradient connectivity_gradient(const Configuration& config,
                                           const SpectralGraph& graph,
                                           const GraphParams& params,
                                           double eigengap_threshold) {
  const int n = config.count();
  if (graph.weights.rows() != n) {
    throw PreconditionError("connectivity_gradient: graph does not match configuration");
  }

  ConnectivityGradient gradient;
  gradient.beta = Eigen::MatrixXd::Zero(n, config.dimension());
  gradient.degenerate_spectrum = graph.eigengap < eigengap_threshold;

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i || graph.weights(i, j) <= 0.0) continue;
      const double d = config.distance(i, j);
      const double dv = graph.fiedler(i) - graph.fiedler(j);
      const double dw = edge_weight_distance_derivative(d, params);
      gradient.beta.row(i) +=
          (dw * dv * dv / d) * (config.position(i) - config.position(j));
    }
  }
  return gradient;
}

std::vector<std::pair<int, int>> graph_edges(const SpectralGraph& graph) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < graph.weights.rows(); ++i) {
    for (int j = i + 1; j < graph.weights.cols(); ++j) {
      if (graph.weights(i, j) > 0.0) edges.emplace_back(i, j);
    }
  }
  return edges;
}

}  // namespace conncbf
