#include "foliate/sampling.hpp"

#include "foliate/errors.hpp"

#include <array>

namespace foliate {

namespace {

constexpr std::array<int, 64> kPrimes = {
    2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,  47,  53,  59,  61,  67,  71,  73,  79,
    83,  89,  97,  101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307, 311};

double radical_inverse(std::uint64_t index, int base) {
    double result = 0.0;
    double f = 1.0 / base;
    while (index > 0) {
        result += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
        index /= static_cast<std::uint64_t>(base);
        f /= base;
    }
    return result;
}

}  // namespace

Eigen::VectorXd halton_point(int dim, std::uint64_t index) {
    if (dim < 1 || dim > static_cast<int>(kPrimes.size())) {
        throw DimensionError("halton_point: dimension must be in 1..64");
    }
    Eigen::VectorXd p(dim);
    for (int i = 0; i < dim; ++i) {
        p[i] = radical_inverse(index, kPrimes[static_cast<std::size_t>(i)]);
    }
    return p;
}

std::vector<Eigen::VectorXd> ball_samples(int dim, int count, std::uint64_t seed, double radius) {
    if (count < 0) {
        throw PreconditionError("ball_samples: negative count");
    }
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(count));
    const int interior = count / 2;
    // Burn-in: low indices are strongly correlated across the large prime bases.
    std::uint64_t index = 4096 + seed * 104729;
    // Rejection from the cube; the acceptance rate falls quickly with dimension, so high
    // dimensions shrink the cube point radially instead of rejecting it.
    while (static_cast<int>(out.size()) < interior) {
        Eigen::VectorXd u = 2.0 * halton_point(dim, index++).array() - 1.0;
        const double r = u.norm();
        if (dim > 6 && r > 1.0) {
            u *= u.cwiseAbs().maxCoeff() / r;
        } else if (r > 1.0) {
            continue;
        }
        out.push_back(radius * u);
    }
    while (static_cast<int>(out.size()) < count) {
        Eigen::VectorXd u = 2.0 * halton_point(dim, index++).array() - 1.0;
        const double r = u.norm();
        if (r < 1e-3) {
            continue;
        }
        out.push_back((radius / r) * u);
    }
    return out;
}

}  // namespace foliate
