#include "conncbf/types.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace conncbf {

void Rect::validate() const {
  if (low.size() == 0 || low.size() != high.size()) {
    throw ValidationError("rect: low/high dimensions do not match");
  }
  for (Eigen::Index k = 0; k < low.size(); ++k) {
    if (!std::isfinite(low(k)) || !std::isfinite(high(k))) {
      throw ValidationError("rect: non-finite bounds");
    }
    if (!(high(k) > low(k))) {
      throw ValidationError("rect: high must exceed low on every axis");
    }
  }
}

Configuration::Configuration(Eigen::MatrixXd positions) : positions_(std::move(positions)) {
  const auto rows = positions_.rows();
  const auto cols = positions_.cols();
  if (rows < 2) {
    throw PreconditionError("configuration: at least two robots required, got " +
                            std::to_string(rows));
  }
  if (cols < 1 || cols > 3) {
    throw PreconditionError("configuration: workspace dimension must be 1, 2 or 3, got " +
                            std::to_string(cols));
  }
  if (!positions_.allFinite()) {
    throw PreconditionError("configuration: non-finite coordinate");
  }
}

double Configuration::min_pairwise_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < count(); ++i) {
    for (int j = i + 1; j < count(); ++j) {
      best = std::min(best, distance(i, j));
    }
  }
  return best;
}

Eigen::VectorXd Configuration::stacked() const {
  Eigen::VectorXd x(positions_.size());
  for (int i = 0; i < count(); ++i) {
    x.segment(i * dimension(), dimension()) = positions_.row(i).transpose();
  }
  return x;
}

Configuration Configuration::from_stacked(const Eigen::VectorXd& x, int dimension) {
  if (dimension <= 0 || x.size() % dimension != 0) {
    throw PreconditionError("configuration: stacked size not divisible by dimension");
  }
  const auto count = x.size() / dimension;
  Eigen::MatrixXd positions(count, dimension);
  for (Eigen::Index i = 0; i < count; ++i) {
    positions.row(i) = x.segment(i * dimension, dimension).transpose();
  }
  return Configuration(std::move(positions));
}

double GraphParams::default_sigma(double comm_radius) {
  const double r2 = comm_radius * comm_radius;
  return r2 * r2 / std::log(2.0);
}

GraphParams GraphParams::make(double comm_radius) {
  return GraphParams{comm_radius, default_sigma(comm_radius)};
}

void GraphParams::validate() const {
  if (!(comm_radius > 0.0) || !std::isfinite(comm_radius)) {
    throw ValidationError("graph.comm_radius: must be a positive length");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ValidationError("graph.sigma: must be positive");
  }
  // Smaller sigma would push edge weights above one and break the
  // normalized-Laplacian bounds the rest of the pipeline assumes.
  if (sigma < default_sigma(comm_radius) * (1.0 - 1e-12)) {
    throw ValidationError("graph.sigma: below the normalization bound R^4/ln 2");
  }
}

}  // namespace conncbf
