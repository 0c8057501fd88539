#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "conncbf/types.hpp"

namespace conncbf {

// Eigenvalues this close to zero are treated as zero (Laplacian PSD slack).
inline constexpr double kEigenvalueTol = 1e-9;
// Robots closer than this are considered coincident and rejected.
inline constexpr double kCoincidenceTol = 1e-12;
// Below this gap between lambda3 and lambda2 the Fiedler pair is flagged as
// numerically degenerate.
inline constexpr double kDegenerateEigengap = 1e-6;

/// Weighted communication graph of a configuration together with its Fiedler
/// pair. `weights` is symmetric with zero diagonal and entries in [0, 1];
/// `laplacian` = degree matrix minus weights; `lambda2` is the algebraic
/// connectivity (clamped to zero when within -kEigenvalueTol); `fiedler` is
/// the associated unit eigenvector with its first nonzero component positive.
struct SpectralGraph {
  Eigen::MatrixXd weights;
  Eigen::MatrixXd laplacian;
  double lambda2 = 0.0;
  Eigen::VectorXd fiedler;
  double eigengap = 0.0;  // lambda3 - lambda2; +inf for N == 2
};

/// Analytic gradient of lambda2 with respect to the stacked positions.
/// Row i of `beta` is d(lambda2)/d(x_i) in 1/meter; rows of isolated robots
/// are zero. `degenerate_spectrum` is set when the eigengap fell below the
/// requested threshold, in which case the gradient is still the one induced
/// by the computed Fiedler vector but may be unreliable.
struct ConnectivityGradient {
  Eigen::MatrixXd beta;
  bool degenerate_spectrum = false;

  Eigen::VectorXd stacked() const;
};

/// Edge weight profile: exp((R^2 - d^2)^2 / sigma) - 1 for d <= R, zero
/// beyond range. Continuous at d = R, strictly decreasing on (0, R].
double edge_weight(double distance, const GraphParams& params);

/// d(weight)/d(distance): -(4 d (R^2 - d^2) / sigma) exp((R^2 - d^2)^2 / sigma)
/// for 0 < d < R, zero from d = R outward. Rejects d <= 0, where the chain
/// rule through the Euclidean distance is undefined.
double edge_weight_distance_derivative(double distance, const GraphParams& params);

/// Builds the spectral data from an explicit weight matrix. Also the test
/// hook for forced-weight graphs.
SpectralGraph spectral_from_weights(Eigen::MatrixXd weights);

/// Builds weights from pairwise distances and decomposes the Laplacian.
/// Coincident robots are a hard error.
SpectralGraph build_spectral_graph(const Configuration& config, const GraphParams& params);

/// Analytic lambda2 gradient: beta_i = sum over neighbors j of
/// (d a_ij / d x_i) (v2_i - v2_j)^2 with d a_ij / d x_i expanded through the
/// inter-robot distance. `graph` must have been built from `config`.
ConnectivityGradient connectivity_gradient(const Configuration& config,
                                           const SpectralGraph& graph,
                                           const GraphParams& params,
                                           double eigengap_threshold = kDegenerateEigengap);

/// Undirected edges (i < j) with strictly positive weight.
std::vector<std::pair<int, int>> graph_edges(const SpectralGraph& graph);

}  // namespace conncbf
