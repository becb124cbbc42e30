#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace foliate {

/// Halton point with the given index in [0, 1)^dim (first `dim` primes as bases, dim <= 64).
Eigen::VectorXd halton_point(int dim, std::uint64_t index);

/// Deterministic low-discrepancy samples of the closed ball of `radius`: the first half are
/// interior points (Halton points of the cube kept when inside the ball), the rest lie on the
/// sphere (normalized Halton points). `seed` shifts the Halton start index.
std::vector<Eigen::VectorXd> ball_samples(int dim, int count, std::uint64_t seed = 0, double radius = 1.0);

}  // namespace foliate
