#pragma once

#include <Eigen/Dense>

#include "conncbf/errors.hpp"

namespace conncbf {

/// Axis-aligned box. Used for spawn regions (any dimension) and for the
/// planar coverage domain.
struct Rect {
  Eigen::VectorXd low;
  Eigen::VectorXd high;

  int dimension() const { return static_cast<int>(low.size()); }
  void validate() const;
};

/// Stacked robot positions: the system state. Row i holds the coordinates of
/// robot i in meters. Immutable after construction; N >= 2, dimension in
/// {1, 2, 3}, all coordinates finite.
class Configuration {
 public:
  explicit Configuration(Eigen::MatrixXd positions);

  int count() const { return static_cast<int>(positions_.rows()); }
  int dimension() const { return static_cast<int>(positions_.cols()); }
  const Eigen::MatrixXd& positions() const { return positions_; }

  Eigen::RowVectorXd position(int i) const { return positions_.row(i); }
  double distance(int i, int j) const {
    return (positions_.row(i) - positions_.row(j)).norm();
  }
  double min_pairwise_distance() const;

  /// Robot-major flattening: [x_1^T ... x_N^T]^T in R^{nN}.
  Eigen::VectorXd stacked() const;
  static Configuration from_stacked(const Eigen::VectorXd& x, int dimension);

 private:
  Eigen::MatrixXd positions_;
};

/// Communication-graph parameters: range R and the weight normalization
/// constant sigma. The smallest sigma keeping every edge weight at or below
/// one is R^4 / ln 2; that is the default and the allowed lower bound.
struct GraphParams {
  double comm_radius = 0.0;  // meters
  double sigma = 0.0;

  static double default_sigma(double comm_radius);
  static GraphParams make(double comm_radius);
  void validate() const;
};

}  // namespace conncbf
