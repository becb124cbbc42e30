#include "foliate/errors.hpp"
#include "foliate/spectral.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <random>
#include <set>

using namespace foliate;

namespace {

bool same_multiset(Spectrum a, Spectrum b, double tol) {
    if (a.size() != b.size()) {
        return false;
    }
    for (const auto& z : a) {
        auto it = std::find_if(b.begin(), b.end(), [&](const cplx& w) { return std::abs(w - z) <= tol; });
        if (it == b.end()) {
            return false;
        }
        b.erase(it);
    }
    return true;
}

std::set<std::tuple<int, int, int>> flagged(const std::vector<ResonanceViolation>& v, const Spectrum& targets) {
    std::set<std::tuple<int, int, int>> out;
    for (const auto& r : v) {
        for (std::size_t t = 0; t < targets.size(); ++t) {
            if (targets[t] == r.target) {
                out.emplace(r.n, r.j, static_cast<int>(t));
            }
        }
    }
    return out;
}

}  // namespace

TEST(ComputeSpectrum, Diagonal) {
    const Eigen::Matrix2d A = Eigen::Vector2d(0.5, 0.25).asDiagonal();
    const auto r = compute_spectrum(A);
    EXPECT_TRUE(same_multiset(r.eigenvalues, {0.5, 0.25}, 1e-15));
    EXPECT_DOUBLE_EQ(r.spectral_radius, 0.5);
    EXPECT_TRUE(r.diagonalizable);
}

TEST(ComputeSpectrum, RotationScale) {
    Eigen::Matrix2d A;
    A << 0.3, -0.4, 0.4, 0.3;
    const auto r = compute_spectrum(A);
    EXPECT_TRUE(same_multiset(r.eigenvalues, {cplx(0.3, 0.4), cplx(0.3, -0.4)}, 1e-14));
    EXPECT_NEAR(r.spectral_radius, 0.5, 1e-14);
}

TEST(ComputeSpectrum, IdentityAndDefective) {
    const auto r = compute_spectrum(Eigen::Matrix3d::Identity());
    EXPECT_TRUE(same_multiset(r.eigenvalues, {1.0, 1.0, 1.0}, 0.0));
    EXPECT_DOUBLE_EQ(r.spectral_radius, 1.0);

    Eigen::Matrix2d J;
    J << 0.5, 1.0, 0.0, 0.5;
    EXPECT_FALSE(compute_spectrum(J).diagonalizable);
}

TEST(ComputeSpectrum, ConjugationClosedAndRadius) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 2 + trial % 7;
        const Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(d, d, [&] { return n01(rng); });
        const auto r = compute_spectrum(A);
        Spectrum conj;
        double rmax = 0.0;
        for (auto z : r.eigenvalues) {
            conj.push_back(std::conj(z));
            rmax = std::max(rmax, std::abs(z));
        }
        EXPECT_TRUE(same_multiset(r.eigenvalues, conj, 0.0));
        EXPECT_LE(std::abs(r.spectral_radius - rmax), 1e-10 * rmax);
    }
}

TEST(SelectEll, SpecExamples) {
    auto s = select_ell({0.5}, {0.5, 0.25}, 10);
    ASSERT_TRUE(s.minimal);
    EXPECT_EQ(*s.minimal, 1);
    EXPECT_EQ(*s.largest, 9);
    EXPECT_TRUE(s.ell_one_admissible);

    s = select_ell({0.9}, {0.9}, 5);
    EXPECT_EQ(*s.minimal, 1);

    s = select_ell({0.1}, {0.99}, 10);
    ASSERT_TRUE(s.minimal);
    EXPECT_EQ(*s.minimal, 229);
    EXPECT_FALSE(s.largest);
    EXPECT_FALSE(s.ell_one_admissible);
    EXPECT_GE(10.0 * std::pow(0.99, 229), 1.0);
    EXPECT_LT(10.0 * std::pow(0.99, 230), 1.0);

    s = select_ell({0.1}, {0.99}, 300);
    EXPECT_EQ(*s.largest, 299);
}

TEST(SelectEll, Errors) {
    EXPECT_THROW(select_ell({0.0}, {0.5}, 4), PreconditionError);
    EXPECT_THROW(select_ell({0.5}, {1.0}, 4), PreconditionError);
}

TEST(SelectEll, Generator) {
    // sup Re sigma(G) = -1, inf Re sigma(G0) = -2.5: need l + 1 > 2.5.
    const auto s = select_ell_generator({-2.5}, {-1.0, -2.5}, 10);
    EXPECT_EQ(*s.minimal, 2);
    EXPECT_EQ(*select_ell_generator({-1.0}, {-1.0, -3.0}, 10).minimal, 1);
}

TEST(CheckH4, Examples) {
    EXPECT_TRUE(check_H4({0.5}, {0.25}, 2).passes());
    const auto r = check_H4({0.25}, {0.5}, 2);
    EXPECT_FALSE(r.passes());
    ASSERT_EQ(r.h4_violations.size(), 1u);
    EXPECT_EQ(r.h4_violations[0].n, 2);
    EXPECT_EQ(r.h4_violations[0].j, 2);
    EXPECT_NEAR(r.h4_violations[0].value.real(), 0.25, 1e-16);
    const auto vac = check_H4({0.25}, {0.5}, 1);
    EXPECT_TRUE(vac.passes());
    EXPECT_TRUE(std::isinf(vac.margin));
}

TEST(CheckH5, Examples) {
    EXPECT_TRUE(check_H5({0.5}, 3, 2).passes());
    const auto r = check_H5({0.5, 0.25}, 2, 2);
    EXPECT_FALSE(r.passes());
    EXPECT_EQ(r.h5_violations.size(), 1u);
    for (double lam : {0.1, 0.5, 0.9, 0.999}) {
        EXPECT_TRUE(check_H5({lam}, 6, 2).passes()) << lam;
    }
}

TEST(CheckH4, NearResonanceWarning) {
    const auto r = check_H4({0.25 * (1 + 1e-6)}, {0.5}, 2);
    EXPECT_TRUE(r.passes());
    EXPECT_EQ(r.warnings.size(), 1u);
    EXPECT_NEAR(r.margin, 1e-6, 1e-9);
}

TEST(GeneratorConditions, Examples) {
    auto r = check_generator_conditions({-1.0, -3.0}, {-1.0}, {-3.0}, 2);
    EXPECT_TRUE(r.passes());
    r = check_generator_conditions({-1.0, -2.0}, {-1.0}, {-2.0}, 2);
    EXPECT_TRUE(r.passes());
    r = check_generator_conditions({-1.0, -2.0}, {-2.0}, {-1.0}, 2);
    EXPECT_FALSE(r.passes());
    ASSERT_FALSE(r.h4_violations.empty());
    EXPECT_EQ(r.h4_violations[0].n, 2);
    EXPECT_EQ(r.h4_violations[0].j, 2);
    r = check_generator_conditions({-1.0, -2.0}, {-2.0}, {-1.0}, 1);
    EXPECT_TRUE(r.h4_violations.empty());
    EXPECT_TRUE(r.h5_violations.empty());
    EXPECT_THROW(check_generator_conditions({0.1}, {-1.0}, {-1.0}, 2), PreconditionError);
}

TEST(ResonanceOracle, AgreesWithBruteForce) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> mod(0.1, 0.95), ang(0.0, 3.14159), coin(0.0, 1.0);
    std::uniform_int_distribution<int> size(1, 4), ellpick(1, 4);
    int planted = 0;
    for (int trial = 0; trial < 200; ++trial) {
        Spectrum s0, s1;
        const int n0 = size(rng), n1 = size(rng);
        for (int i = 0; i < n0; ++i) {
            s0.push_back(coin(rng) < 0.3 ? std::polar(mod(rng), ang(rng)) : cplx(mod(rng)));
        }
        for (int i = 0; i < n1; ++i) {
            s1.push_back(cplx(mod(rng)));
        }
        // Plant an exact resonance half of the time.
        if (coin(rng) < 0.5) {
            s0.push_back(s1[0] * s1[0]);
            ++planted;
        }
        const int ell = ellpick(rng);
        auto lib = check_H4(s0, s1, ell);
        lib.absorb(check_H5(s0, ell, 2));
        const auto ref = oracle::map_conditions(s0, s1, ell, kResonanceTol);
        EXPECT_EQ(flagged(lib.h4_violations, s0), ref.mixed) << "trial " << trial;
        EXPECT_EQ(flagged(lib.h5_violations, s0), ref.pure) << "trial " << trial;
        EXPECT_EQ(lib.passes(), ref.mixed.empty() && ref.pure.empty());
        if (std::isfinite(ref.margin)) {
            EXPECT_NEAR(lib.margin, ref.margin, 1e-12 * std::max(1.0, ref.margin));
        }

        // Generator version uses the logarithms, shifted into the left half-plane.
        Spectrum g0, g1, g;
        for (auto z : s0) {
            g0.push_back(std::log(z));
        }
        for (auto z : s1) {
            g1.push_back(std::log(z));
        }
        g = g0;
        g.insert(g.end(), g1.begin(), g1.end());
        const auto glib = check_generator_conditions(g, g0, g1, ell);
        const auto gref = oracle::generator_conditions(g, g0, g1, ell, kResonanceTol);
        EXPECT_EQ(flagged(glib.h4_violations, g0), gref.mixed) << "trial " << trial;
        EXPECT_EQ(flagged(glib.h5_violations, g0), gref.pure) << "trial " << trial;
        EXPECT_EQ(glib.growth_ok, gref.growth_ok);
    }
    EXPECT_GT(planted, 50);
}

TEST(SpectralProjection, Diagonal) {
    const Eigen::Matrix2d A = Eigen::Vector2d(0.5, 0.25).asDiagonal();
    const auto p = spectral_projection(A, {0.5});
    EXPECT_LT((p.P - Eigen::Vector2d(1, 0).asDiagonal().toDenseMatrix()).norm(), 1e-14);
    EXPECT_LT((p.basis - Eigen::Vector2d(1, 0)).norm(), 1e-14);
    EXPECT_LT((p.complement - Eigen::Vector2d(0, 1)).norm(), 1e-14);
}

TEST(SpectralProjection, LowerTriangular) {
    Eigen::Matrix2d A;
    A << 0.5, 0.0, 1.0, 0.25;
    const auto p = spectral_projection(A, {0.5});
    const Eigen::Vector2d v = Eigen::Vector2d(1, 4).normalized();
    EXPECT_LT((p.basis - v).norm(), 1e-12);
    EXPECT_LT((p.P * p.P - p.P).norm(), 1e-12);
    EXPECT_LT((A * p.P - p.P * A).norm(), 1e-12);
    EXPECT_LT((p.P * Eigen::Vector2d(0, 1)).norm(), 1e-12);
}

TEST(SpectralProjection, FullSpectrumIsIdentity) {
    Eigen::Matrix3d A;
    A << 0.5, 0.1, 0, 0, 0.3, 0.2, 0.1, 0, -0.2;
    const auto spec = compute_spectrum(A).eigenvalues;
    const auto p = spectral_projection(A, spec);
    EXPECT_LT((p.P - Eigen::Matrix3d::Identity()).norm(), 1e-12);
    EXPECT_EQ(p.complement.cols(), 0);
}

TEST(SpectralProjection, AlgebraOnRandomMatrices) {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 15; ++trial) {
        const int d = 3 + trial % 10;
        const Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(d, d, [&] { return n01(rng); });
        const auto spec = compute_spectrum(A).eigenvalues;
        // Leading eigenvalue, plus its conjugate when complex.
        Spectrum subset{spec[0]};
        if (spec[0].imag() != 0.0) {
            subset.push_back(std::conj(spec[0]));
        }
        SpectralProjection p;
        try {
            p = spectral_projection(A, subset, 1e-3);
        } catch (const PreconditionError&) {
            continue;  // eigenvalues too close for this draw
        }
        EXPECT_LT((p.P * p.P - p.P).norm(), 1e-10);
        EXPECT_LT((A * p.P - p.P * A).norm(), 1e-10 * std::max(1.0, A.norm()));
        EXPECT_EQ(p.basis.cols(), static_cast<Eigen::Index>(subset.size()));
        EXPECT_NEAR(p.P.trace(), static_cast<double>(subset.size()), 1e-10);
        const Eigen::MatrixXd restricted = p.basis.transpose() * A * p.basis;
        EXPECT_TRUE(same_multiset(compute_spectrum(restricted).eigenvalues, subset, 1e-9));
        EXPECT_LT((p.P * p.complement).norm(), 1e-10);
    }
}

TEST(SpectralProjection, Errors) {
    Eigen::Matrix3d A;
    A << 0.3, -0.4, 0, 0.4, 0.3, 0, 0, 0, 0.1;
    EXPECT_THROW(spectral_projection(A, {cplx(0.3, 0.4)}), PreconditionError);
    EXPECT_NO_THROW(spectral_projection(A, {cplx(0.3, 0.4), cplx(0.3, -0.4)}));
    const Eigen::Matrix2d close = Eigen::Vector2d(0.5, 0.5 + 1e-10).asDiagonal();
    EXPECT_THROW(spectral_projection(close, {0.5}, 1e-8, 1e-12), PreconditionError);
    EXPECT_THROW(spectral_projection(A, {cplx(0.9)}), PreconditionError);
}

TEST(Realify, Blocks) {
    EXPECT_EQ(realify_block(-1.0).rows(), 1);
    EXPECT_EQ(realify_block(-1.0)(0, 0), -1.0);
    Eigen::Matrix2d expected;
    expected << -1, -2, 2, -1;
    EXPECT_EQ(realify_block(cplx(-1, 2)), Eigen::MatrixXd(expected));
    expected << 0, -1, 1, 0;
    EXPECT_EQ(realify_block(cplx(0, 1)), Eigen::MatrixXd(expected));
}

TEST(Realify, EigenvaluesAndExponential) {
    const cplx lam(-0.7, 1.3);
    const auto M = realify_block(lam);
    EXPECT_TRUE(same_multiset(compute_spectrum(M).eigenvalues, {lam, std::conj(lam)}, 1e-14));
    for (double t : {0.1, 1.0}) {
        const Eigen::MatrixXd E = (t * M).exp();
        const cplx e = std::exp(lam * t);
        Eigen::Matrix2d block;
        block << e.real(), -e.imag(), e.imag(), e.real();
        EXPECT_LT((E - block).norm(), 1e-12);
    }
}

TEST(EstimateDecay, Examples) {
    auto e = estimate_decay(Eigen::Vector2d(0.5, 0.25).asDiagonal().toDenseMatrix());
    EXPECT_NEAR(e.rate, 0.5, 1e-10);
    EXPECT_NEAR(e.C, 1.0, 1e-10);

    Eigen::Matrix2d J;
    J << 0.5, 10, 0, 0.5;
    e = estimate_decay(J, 200);
    EXPECT_LT(e.rate, 0.52);
    EXPECT_GE(e.rate, 0.5);
    EXPECT_GT(e.C, 10.0);
    Eigen::MatrixXd Jk = Eigen::MatrixXd::Identity(2, 2);
    for (int k = 0; k <= 200; ++k) {
        EXPECT_LE(Jk.operatorNorm(), e.C * std::pow(e.rate, k) * (1 + 1e-10));
        Jk = J * Jk;
    }

    e = estimate_decay(Eigen::Matrix2d::Zero());
    EXPECT_EQ(e.rate, 0.0);
    EXPECT_THROW(estimate_decay(Eigen::Matrix2d::Identity()), PreconditionError);
}
