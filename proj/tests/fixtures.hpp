#pragma once

// Shared test fixtures.

#include "foliate/model.hpp"
#include "foliate/tensor_poly.hpp"

#include <Eigen/Dense>

#include <random>

namespace fixture {

using foliate::Exponent;
using foliate::JetMap;

// f(x0, x1) = (a x0 + c x1^2, b x1)
inline JetMap quadratic_map(double a = 0.5, double b = 0.6, double c = 1.0) {
    JetMap j(2, 2, 2);
    j[1].coeffs() << a, 0.0, 0.0, b;
    j[2].set_coeff(Exponent{0, 2}, Eigen::Vector2d(c, 0.0));
    return j;
}

// f(x0, x1) = (a x0 + x0^2, b x1)
inline JetMap self_quadratic_map(double a = 0.5, double b = 0.6) {
    JetMap j(2, 2, 2);
    j[1].coeffs() << a, 0.0, 0.0, b;
    j[2].set_coeff(Exponent{2, 0}, Eigen::Vector2d(1.0, 0.0));
    return j;
}

// f = (0.5 x0 + x1^2 + 0.1 x0^3, 0.6 x1)
inline JetMap cubic_perturbation_map() {
    JetMap j(2, 2, 3);
    j[1].coeffs() << 0.5, 0.0, 0.0, 0.6;
    j[2].set_coeff(Exponent{0, 2}, Eigen::Vector2d(1.0, 0.0));
    j[3].set_coeff(Exponent{3, 0}, Eigen::Vector2d(0.1, 0.0));
    return j;
}

// x' = -x, y' = -rate y + x^2
inline JetMap two_rate_field(double rate_y) {
    JetMap j(2, 2, 2);
    j[1].coeffs() << -1.0, 0.0, 0.0, -rate_y;
    j[2].set_coeff(Exponent{2, 0}, Eigen::Vector2d(0.0, 1.0));
    return j;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Eigen::MatrixXd M(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            M(i, j) = u(rng);
        }
    }
    return M;
}

/// Well-conditioned S with A = S diag(eigs) S^-1.
inline Eigen::MatrixXd matrix_with_real_spectrum(std::mt19937_64& rng, const Eigen::VectorXd& eigs) {
    const int d = static_cast<int>(eigs.size());
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(d, d) + random_matrix(rng, d, d, 0.3);
    return S * eigs.asDiagonal() * S.inverse();
}

/// Jet with linear part A and random components of degrees 2..order.
inline JetMap random_jet(std::mt19937_64& rng, const Eigen::MatrixXd& A, int order, double scale = 0.5) {
    const int d = static_cast<int>(A.rows());
    JetMap j(d, d, order);
    j[1].coeffs() = A;
    for (int n = 2; n <= order; ++n) {
        j[n].coeffs() = random_matrix(rng, d, static_cast<int>(j[n].size()), scale);
    }
    return j;
}

}  // namespace fixture
