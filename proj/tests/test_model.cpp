#include "foliate/errors.hpp"
#include "foliate/model.hpp"

#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

using namespace foliate;

namespace {

// f(x0, x1) = (0.5 x0 + x1^2, 0.6 x1)
JetMap quadratic_fixture_jet() {
    JetMap j(2, 2, 2);
    j[1].coeffs() << 0.5, 0.0, 0.0, 0.6;
    j[2].set_coeff(Exponent{0, 2}, Eigen::Vector2d(1.0, 0.0));
    return j;
}

// x' = -x, y' = -3 y + x^2
JetMap two_rate_field(double rate_y = 3.0) {
    JetMap j(2, 2, 2);
    j[1].coeffs() << -1.0, 0.0, 0.0, -rate_y;
    j[2].set_coeff(Exponent{2, 0}, Eigen::Vector2d(0.0, 1.0));
    return j;
}

IntegratorSettings tight() {
    IntegratorSettings s;
    s.atol = 1e-15;
    s.rtol = 1e-13;
    return s;
}

}  // namespace

TEST(Ode, ExponentialDecay) {
    const VecFn f = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
    IntegrationStats stats;
    const auto y = integrate(f, Eigen::VectorXd::Ones(1), 2.0, {}, &stats);
    EXPECT_NEAR(y[0], std::exp(-2.0), 1e-10);
    EXPECT_GT(stats.accepted, 0);
    const auto ys = integrate_to_times(f, Eigen::VectorXd::Ones(1), {0.0, 1.0, 3.0});
    EXPECT_EQ(ys[0][0], 1.0);
    EXPECT_NEAR(ys[1][0], std::exp(-1.0), 1e-10);
    EXPECT_NEAR(ys[2][0], std::exp(-3.0), 1e-10);
}

TEST(Ode, BlowUpIsReported) {
    const VecFn f = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(x.array().square()); };
    EXPECT_THROW(integrate(f, Eigen::VectorXd::Ones(1), 2.0), ConvergenceError);
}

TEST(MapModel, PolynomialFixture) {
    const auto m = make_polynomial_map(quadratic_fixture_jet());
    Eigen::Matrix2d A;
    A << 0.5, 0, 0, 0.6;
    EXPECT_EQ(m.A, Eigen::MatrixXd(A));
    EXPECT_EQ(m.jet[2].coeff(Exponent{0, 2}), Eigen::Vector2d(1.0, 0.0));
}

TEST(MapModel, FiniteDifferenceJet) {
    const VecFn f = [](const Eigen::VectorXd& x) {
        return Eigen::VectorXd((Eigen::Vector2d() << 0.5 * x[0] + x[1] * x[1] + 0.2 * x[0] * x[0] * x[1],
                                0.6 * x[1] - std::sin(x[0]) + x[0])
                                   .finished());
    };
    const auto m = make_map_model(f, 2, std::nullopt, 4);
    EXPECT_NEAR(m.A(0, 0), 0.5, 1e-9);
    EXPECT_NEAR(m.A(1, 1), 0.6, 1e-9);
    EXPECT_NEAR(m.A(1, 0), 0.0, 1e-9);
    EXPECT_NEAR(m.jet[2].coeff(Exponent{0, 2})[0], 1.0, 1e-8);
    EXPECT_NEAR(m.jet[3].coeff(Exponent{2, 1})[0], 0.2, 1e-7);
    EXPECT_NEAR(m.jet[3].coeff(Exponent{3, 0})[1], 1.0 / 6.0, 1e-7);
    EXPECT_NEAR(m.jet[4].max_abs(), 0.0, 1e-6);
    EXPECT_THROW(make_map_model(f, 2, std::nullopt, 5), PreconditionError);
}

TEST(MapModel, LinearMapHasOnlyDegreeOne) {
    Eigen::Matrix2d A;
    A << 0.3, 0.1, 0.0, 0.2;
    const auto m = make_polynomial_map(JetMap::linear(A, 3));
    EXPECT_EQ(m.jet.order(), 3);
    EXPECT_EQ(m.jet[2].max_abs(), 0.0);
    EXPECT_EQ(m.jet[3].max_abs(), 0.0);
}

TEST(MapModel, FixedPointResidual) {
    const VecFn f = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(0.5 * x.array() + 1e-3); };
    try {
        make_map_model(f, 1, std::nullopt, 2);
        FAIL() << "expected a fixed point error";
    } catch (const PreconditionError& e) {
        EXPECT_NE(std::string(e.what()).find("fixed point residual"), std::string::npos);
    }
}

TEST(MapModel, JetMismatch) {
    const VecFn f = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(0.5 * x); };
    EXPECT_THROW(make_map_model(f, 1, JetMap::linear(Eigen::MatrixXd::Constant(1, 1, 0.4), 1), 1),
                 PreconditionError);
}

TEST(TimeTau, ScalarLinearFlow) {
    const auto flow = make_polynomial_flow(JetMap::linear(Eigen::MatrixXd::Constant(1, 1, -1.0), 1));
    const auto m = time_tau_map(flow, 1.0, 3);
    EXPECT_NEAR(m.A(0, 0), std::exp(-1.0), 1e-10);
    EXPECT_LT(m.jet[2].max_abs() + m.jet[3].max_abs(), 1e-14);
}

TEST(TimeTau, VariationOfConstantsClosedForm) {
    const auto flow = make_polynomial_flow(two_rate_field());
    const auto m = time_tau_map(flow, 1.0, 2);
    // y(t) = e^{-3t} y0 + (e^{-2t} - e^{-3t}) x0^2, since x^2 decays like e^{-2t}.
    const double c = std::exp(-2.0) - std::exp(-3.0);
    EXPECT_NEAR(c, 0.0855482, 1e-6);
    EXPECT_NEAR(m.jet[2].coeff(Exponent{2, 0})[1], c, 1e-9);
    EXPECT_NEAR(m.A(1, 1), std::exp(-3.0), 1e-10);
    // The closed form is exact in x0 for the full flow as well.
    const Eigen::Vector2d x(0.3, -0.1);
    const auto y = m.eval(x);
    EXPECT_NEAR(y[1], std::exp(-3.0) * x[1] + c * x[0] * x[0], 1e-9);
}

TEST(TimeTau, JetTransportOrder) {
    // The error of the degree-N jet scales like |x|^(N+1).
    const auto flow = make_polynomial_flow(two_rate_field(2.5), tight());
    auto field = flow;
    field.vf_jet[2].set_coeff(Exponent{1, 1}, Eigen::Vector2d(0.7, 0.4));
    field = make_polynomial_flow(field.vf_jet, tight());
    for (int N : {1, 2}) {
        const auto m = time_tau_map(field, 0.5, N);
        std::vector<double> lx, le;
        for (double r : {1e-3, 3e-3, 1e-2}) {
            const Eigen::Vector2d x = r * Eigen::Vector2d(0.8, 0.6);
            lx.push_back(std::log(r));
            le.push_back(std::log((m.eval(x) - eval_jet(m.jet, x)).norm()));
        }
        const double slope = (le.back() - le.front()) / (lx.back() - lx.front());
        EXPECT_NEAR(slope, N + 1, 0.2) << "N = " << N;
    }
}

TEST(TimeTau, SemigroupAtJetLevel) {
    const auto flow = make_polynomial_flow(two_rate_field(2.5));
    const auto half = flow_jet(flow, 0.25, 4);
    const auto full = flow_jet(flow, 0.5, 4);
    EXPECT_LT((compose_jets(half, half, 4) - full).max_abs(), 1e-8);
}

TEST(ChafeeInfante, OneMode) {
    const auto flow = build_chafee_infante(0.5, 1);
    EXPECT_NEAR(flow.G(0, 0), -0.5, 1e-15);
    EXPECT_NEAR(flow.vf_jet[3].coeffs()(0, 0), -0.75, 1e-14);
}

TEST(ChafeeInfante, SpectrumAndQuadrature) {
    const auto flow = build_chafee_infante(0.5, 3);
    const auto s = compute_spectrum(flow.G, SpectrumOrder::RealPart).eigenvalues;
    ASSERT_EQ(s.size(), 3u);
    EXPECT_NEAR(s[0].real(), -0.5, 1e-14);
    EXPECT_NEAR(s[1].real(), -3.5, 1e-14);
    EXPECT_NEAR(s[2].real(), -8.5, 1e-14);

    // Cubic term against direct quadrature of -(2/pi) int u^3 sin(i x).
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    const Eigen::Vector3d a(u(rng), u(rng), u(rng));
    const int M = 20000;
    Eigen::Vector3d ref = Eigen::Vector3d::Zero();
    for (int q = 0; q < M; ++q) {
        const double x = (q + 0.5) * M_PI / M;
        const double ux = a[0] * std::sin(x) + a[1] * std::sin(2 * x) + a[2] * std::sin(3 * x);
        for (int i = 0; i < 3; ++i) {
            ref[i] -= 2.0 / M_PI * ux * ux * ux * std::sin((i + 1) * x) * (M_PI / M);
        }
    }
    EXPECT_LT((flow.vf_jet[3](a) - ref).norm(), 1e-8);
    for (double lam : {0.0, 0.5, 0.99}) {
        const auto st = compute_spectrum(build_chafee_infante(lam, 4).G);
        for (auto z : st.eigenvalues) {
            EXPECT_LT(z.real(), 0.0);
        }
    }
}

TEST(ChafeeInfante, SpectralMapping) {
    const auto flow = build_chafee_infante(0.5, 8);
    const double tau = default_tau(compute_spectrum(flow.G).eigenvalues);
    const auto m = time_tau_map(flow, tau, 3);
    EXPECT_LE(m.spectral_mapping_error, 1e-8);
}

TEST(Kolmogorov, DimensionsAndStokesLimit) {
    KolmogorovOptions opt;
    opt.cutoff = 1;
    opt.amplitude = 0.0;
    opt.reynolds = 4.0;
    const auto m = build_ns_kolmogorov(opt);
    EXPECT_EQ(m.flow.dim, 8);
    for (int i = 0; i < 8; ++i) {
        const auto k = m.wavevectors[static_cast<std::size_t>(i / 2)];
        EXPECT_NEAR(m.flow.G(i, i), -(k[0] * k[0] + k[1] * k[1]) / 4.0, 1e-14);
    }
    EXPECT_LT((m.flow.G - Eigen::MatrixXd(m.flow.G.diagonal().asDiagonal())).norm(), 1e-14);
    opt.cutoff = 2;
    EXPECT_EQ(build_ns_kolmogorov(opt).flow.dim, 24);
}

TEST(Kolmogorov, EnergyConservation) {
    KolmogorovOptions opt;
    opt.cutoff = 2;
    opt.reynolds = 5.0;
    const auto m = build_ns_kolmogorov(opt);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    for (int t = 0; t < 20; ++t) {
        const Eigen::VectorXd u = Eigen::VectorXd::NullaryExpr(m.flow.dim, [&] { return n01(rng); });
        EXPECT_LE(std::abs(m.B(u, u).dot(u)), 1e-12 * u.squaredNorm() * u.norm());
        // The quadratic jet reproduces -B(u, u).
        EXPECT_LT((m.flow.vf_jet[2](u) + m.B(u, u)).norm(), 1e-12 * u.squaredNorm());
    }
}

TEST(Kolmogorov, SubcriticalIsStable) {
    KolmogorovOptions opt;
    opt.cutoff = 2;
    opt.forcing_wavenumber = 1;
    opt.reynolds = 5.0;
    const auto s = compute_spectrum(build_ns_kolmogorov(opt).flow.G).eigenvalues;
    for (auto z : s) {
        EXPECT_LT(z.real(), 0.0);
    }
}

TEST(SplitChoice, Diagonal) {
    const Eigen::Matrix2d A = Eigen::Vector2d(0.5, 0.25).asDiagonal();
    const auto s = make_split_choice(A, {0.5});
    EXPECT_EQ(s.dim0, 1);
    EXPECT_NEAR(s.A0(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(s.A1(0, 0), 0.25, 1e-15);
    EXPECT_NEAR(s.B.norm(), 0.0, 1e-15);
    EXPECT_TRUE(s.original().coordinate_adapted());
    EXPECT_EQ(s.original().basis0(), std::vector<int>{0});
}

TEST(SplitChoice, LowerTriangular) {
    Eigen::Matrix2d A;
    A << 0.5, 0.0, 1.0, 0.25;
    const auto s = make_split_choice(A, {0.5});
    EXPECT_NEAR(s.A0(0, 0), 0.5, 1e-12);
    EXPECT_LE(s.triangularity, 1e-10);
    // P0~ is proportional to the left eigenvector (1, 0).
    const auto split = s.original();
    EXPECT_NEAR(split.P0_tilde()(0, 1), 0.0, 1e-12);
    EXPECT_LT((split.P0_tilde() * A - s.A0 * split.P0_tilde()).norm(), 1e-12);

    const auto s2 = make_split_choice(A, {0.25});
    EXPECT_NEAR(s2.A0(0, 0), 0.25, 1e-12);
    EXPECT_LT((s2.T.col(0) - Eigen::Vector2d(0, 1)).norm(), 1e-12);
}

TEST(SplitChoice, Triangularity) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n01;
    for (int t = 0; t < 10; ++t) {
        const int d = 3 + t % 4;
        Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(d, d, [&] { return n01(rng); });
        A /= 1.5 * compute_spectrum(A).spectral_radius;
        const auto spec = compute_spectrum(A).eigenvalues;
        Spectrum subset{spec[0]};
        if (spec[0].imag() != 0.0) {
            subset.push_back(std::conj(spec[0]));
        }
        const auto s = make_split_choice(A, subset, 1e-4);
        EXPECT_LE(s.triangularity, 1e-10);
        EXPECT_LT((s.T * s.A_adapted() * s.Tinv - A).norm(), 1e-10);
    }
}

TEST(SplitChoice, AdaptedJet) {
    Eigen::Matrix2d A;
    A << 0.5, 0.0, 1.0, 0.25;
    JetMap f = JetMap::linear(A, 2);
    f[2].set_coeff(Exponent{1, 1}, Eigen::Vector2d(0.3, -0.2));
    const auto s = make_split_choice(A, {0.5});
    const auto fa = to_adapted(f, s);
    const Eigen::Vector2d z(0.01, -0.02);
    const Eigen::VectorXd direct = s.Tinv * eval_jet(f, Eigen::VectorXd(s.T * z));
    EXPECT_LT((eval_jet(fa, z) - direct).norm(), 1e-16);
    EXPECT_LT((fa.linear_part() - s.A_adapted()).norm(), 1e-12);
}
