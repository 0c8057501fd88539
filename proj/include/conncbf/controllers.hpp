#pragma once

#include <Eigen/Dense>
#include <vector>

#include "conncbf/graph_topology.hpp"
#include "conncbf/types.hpp"

namespace conncbf {

struct GaussianComponent {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double scale = 1.0;      // isotropic standard deviation, meters
  double amplitude = 1.0;  // peak density
};

/// Nonnegative density over a planar rectangular domain.
struct DensityField {
  enum class Kind { uniform, gaussian_mixture };

  Kind kind = Kind::uniform;
  std::vector<GaussianComponent> components;  // gaussian_mixture only
  Rect domain;

  double value(const Eigen::Vector2d& q) const;
  void validate() const;
};

/// Grid-discretized Voronoi tessellation of the domain with density-weighted
/// cell masses and centroids. Cells are the centers of an m x m lattice; each
/// cell belongs to the nearest robot, ties to the lowest index. Robots owning
/// zero mass keep their own position as centroid.
struct VoronoiPartition {
  int resolution = 0;
  Rect domain;
  double cell_area = 0.0;
  std::vector<int> assignment;   // m*m, row-major by y then x
  std::vector<double> density;   // density sampled at each cell center
  Eigen::MatrixXd centroids;     // N x 2
  Eigen::VectorXd cell_mass;     // N, density mass times cell area

  Eigen::Vector2d cell_center(int ix, int iy) const;
};

/// Weighted Laplacian flow u_i = -k sum_j a_ij (x_i - x_j).
Eigen::VectorXd consensus_input(const Configuration& config, const SpectralGraph& graph,
                                double gain);

/// Constant planar dispersal direction for one robot: the unit vector at
/// angle 2 pi (i+1) / (N+1) scaled by the gain (robot_index is zero-based).
/// Directions are pairwise distinct, which is what makes this input tear a
/// group apart when unopposed.
Eigen::Vector2d radial_disconnecting_input(int robot_index, int robot_count, double gain);

/// Stacked dispersal input for the whole group; planar workspaces only.
Eigen::VectorXd radial_disconnecting_inputs(const Configuration& config, double gain);

/// Discretizes the domain at the given per-axis resolution (>= 16) and
/// assigns cells to robots. Fails when the density integrates to zero.
VoronoiPartition voronoi_partition(const Configuration& config, const DensityField& density,
                                   int resolution);

/// Standard Lloyd step toward the owned-cell centroid: u_i = -k (x_i - c_i).
Eigen::VectorXd lloyd_input(const Configuration& config, const VoronoiPartition& partition,
                            double gain);

/// Coverage performance measure: sum over cells of squared distance to the
/// owning robot, density weighted (Riemann sum over the partition grid).
double locational_cost(const Configuration& config, const VoronoiPartition& partition);

}  // namespace conncbf
