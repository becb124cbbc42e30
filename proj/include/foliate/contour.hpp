#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace foliate {

using Polyline = std::vector<std::array<double, 2>>;

/// Marching squares on values(i, j) sampled at (xs[i], ys[j]); segments are chained into
/// polylines (closed ones repeat their first point). Saddle cells are split by the cell mean.
std::vector<Polyline> level_set_polylines(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys,
                                          const Eigen::MatrixXd& values, double level);

}  // namespace foliate
