#include "conncbf/controllers.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace conncbf {

double DensityField::value(const Eigen::Vector2d& q) const {
  if (kind == Kind::uniform) return 1.0;
  double total = 0.0;
  for (const GaussianComponent& c : components) {
    const double r2 = (q - c.center).squaredNorm();
    total += c.amplitude * std::exp(-r2 / (2.0 * c.scale * c.scale));
  }
  return total;
}

void DensityField::validate() const {
  domain.validate();
  if (domain.dimension() != 2) {
    throw ValidationError("density.domain: coverage domains are planar");
  }
  if (kind == Kind::gaussian_mixture) {
    if (components.empty()) {
      throw ValidationError("density.components: gaussian_mixture needs at least one component");
    }
    for (const GaussianComponent& c : components) {
      if (!(c.scale > 0.0)) throw ValidationError("density.components: scale must be > 0");
      if (c.amplitude < 0.0) throw ValidationError("density.components: amplitude must be >= 0");
    }
  }
}

Eigen::Vector2d VoronoiPartition::cell_center(int ix, int iy) const {
  const double dx = (domain.high(0) - domain.low(0)) / resolution;
  const double dy = (domain.high(1) - domain.low(1)) / resolution;
  return {domain.low(0) + (ix + 0.5) * dx, domain.low(1) + (iy + 0.5) * dy};
}

Eigen::VectorXd consensus_input(const Configuration& config, const SpectralGraph& graph,
                                double gain) {
  const int count = config.count();
  const int n = config.dimension();
  if (graph.weights.rows() != count) {
    throw PreconditionError("consensus_input: graph does not match configuration");
  }
  Eigen::VectorXd u(count * n);
  for (int i = 0; i < count; ++i) {
    Eigen::RowVectorXd pull = Eigen::RowVectorXd::Zero(n);
    for (int j = 0; j < count; ++j) {
      const double w = graph.weights(i, j);
      if (j == i || w <= 0.0) continue;
      pull += w * (config.position(i) - config.position(j));
    }
    u.segment(i * n, n) = -gain * pull.transpose();
  }
  return u;
}

Eigen::Vector2d radial_disconnecting_input(int robot_index, int robot_count, double gain) {
  if (robot_index < 0 || robot_index >= robot_count) {
    throw PreconditionError("radial_disconnecting_input: robot index out of range");
  }
  const double angle =
      2.0 * std::numbers::pi * (robot_index + 1) / static_cast<double>(robot_count + 1);
  return {gain * std::cos(angle), gain * std::sin(angle)};
}

Eigen::VectorXd radial_disconnecting_inputs(const Configuration& config, double gain) {
  if (config.dimension() != 2) {
    throw PreconditionError("radial_disconnecting_inputs: defined for planar workspaces only");
  }
  Eigen::VectorXd u(config.count() * 2);
  for (int i = 0; i < config.count(); ++i) {
    u.segment(i * 2, 2) = radial_disconnecting_input(i, config.count(), gain);
  }
  return u;
}

VoronoiPartition voronoi_partition(const Configuration& config, const DensityField& density,
                                   int resolution) {
  if (config.dimension() != 2) {
    throw PreconditionError("voronoi_partition: grid partition is planar (n = 2)");
  }
  if (resolution < 16) {
    throw PreconditionError("voronoi_partition: resolution must be at least 16, got " +
                            std::to_string(resolution));
  }
  density.validate();

  const int count = config.count();
  const int m = resolution;
  VoronoiPartition partition;
  partition.resolution = m;
  partition.domain = density.domain;
  const double dx = (density.domain.high(0) - density.domain.low(0)) / m;
  const double dy = (density.domain.high(1) - density.domain.low(1)) / m;
  partition.cell_area = dx * dy;
  partition.assignment.assign(static_cast<std::size_t>(m) * m, 0);
  partition.density.assign(static_cast<std::size_t>(m) * m, 0.0);

  Eigen::VectorXd mass = Eigen::VectorXd::Zero(count);
  Eigen::MatrixXd weighted_sum = Eigen::MatrixXd::Zero(count, 2);

  for (int iy = 0; iy < m; ++iy) {
    for (int ix = 0; ix < m; ++ix) {
      const Eigen::Vector2d q = partition.cell_center(ix, iy);
      int owner = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < count; ++i) {
        const double d2 = (q.transpose() - config.position(i)).squaredNorm();
        if (d2 < best) {  // strict: ties stay with the lowest index
          best = d2;
          owner = i;
        }
      }
      const double phi = density.value(q);
      if (phi < 0.0) {
        throw PreconditionError("voronoi_partition: density must be nonnegative");
      }
      const std::size_t cell = static_cast<std::size_t>(iy) * m + ix;
      partition.assignment[cell] = owner;
      partition.density[cell] = phi;
      mass(owner) += phi;
      weighted_sum.row(owner) += phi * q.transpose();
    }
  }

  if (mass.sum() <= 0.0) {
    throw PreconditionError("voronoi_partition: density integrates to zero over the domain");
  }

  partition.centroids.resize(count, 2);
  partition.cell_mass.resize(count);
  for (int i = 0; i < count; ++i) {
    if (mass(i) > 0.0) {
      partition.centroids.row(i) = weighted_sum.row(i) / mass(i);
    } else {
      // Massless cell: hold position rather than invent a target.
      partition.centroids.row(i) = config.position(i);
    }
    partition.cell_mass(i) = mass(i) * partition.cell_area;
  }
  return partition;
}

Eigen::VectorXd lloyd_input(const Configuration& config, const VoronoiPartition& partition,
                            double gain) {
  if (config.dimension() != 2 || partition.centroids.rows() != config.count()) {
    throw PreconditionError("lloyd_input: partition does not match configuration");
  }
  Eigen::VectorXd u(config.count() * 2);
  for (int i = 0; i < config.count(); ++i) {
    u.segment(i * 2, 2) =
        -gain * (config.position(i) - partition.centroids.row(i)).transpose();
  }
  return u;
}

double locational_cost(const Configuration& config, const VoronoiPartition& partition) {
  if (config.dimension() != 2) {
    throw PreconditionError("locational_cost: planar configurations only");
  }
  const int m = partition.resolution;
  double cost = 0.0;
  for (int iy = 0; iy < m; ++iy) {
    for (int ix = 0; ix < m; ++ix) {
      const std::size_t cell = static_cast<std::size_t>(iy) * m + ix;
      const int owner = partition.assignment[cell];
      if (owner < 0 || owner >= config.count()) {
        throw PreconditionError("locational_cost: partition does not match configuration");
      }
      const Eigen::Vector2d q = partition.cell_center(ix, iy);
      cost += (q.transpose() - config.position(owner)).squaredNorm() *
              partition.density[cell] * partition.cell_area;
    }
  }
  return cost;
}

}  // namespace conncbf
