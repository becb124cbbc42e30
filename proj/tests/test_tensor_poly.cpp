#include "foliate/errors.hpp"
#include "foliate/tensor_poly.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace foliate;

namespace {

JetMap random_jet(int in_dim, int out_dim, int order, std::mt19937_64& rng, bool zero_constant = true) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    JetMap j(in_dim, out_dim, order);
    for (int n = zero_constant ? 1 : 0; n <= order; ++n) {
        j[n].coeffs() = Eigen::MatrixXd::NullaryExpr(out_dim, static_cast<Eigen::Index>(j[n].size()),
                                                     [&] { return u(rng); });
    }
    return j;
}

double max_diff(const JetMap& a, const JetMap& b) {
    return (a - b).max_abs();
}

}  // namespace

TEST(MonomialCount, Binomial) {
    EXPECT_EQ(monomial_count(2, 2), 3u);
    EXPECT_EQ(monomial_count(3, 0), 1u);
    EXPECT_EQ(monomial_count(4, 3), 20u);
    EXPECT_EQ(monomial_count(8, 7), 3432u);
}

TEST(MonomialTable, GradedLexOrderAndRank) {
    const auto& t = MonomialTable::get(2, 2);
    ASSERT_EQ(t.size(), 3u);
    EXPECT_EQ(t.exponent(0), (Exponent{2, 0}));
    EXPECT_EQ(t.exponent(1), (Exponent{1, 1}));
    EXPECT_EQ(t.exponent(2), (Exponent{0, 2}));

    const auto& t3 = MonomialTable::get(4, 3);
    for (std::size_t k = 0; k < t3.size(); ++k) {
        EXPECT_EQ(t3.index_of(t3.exponent(k)), k);
        if (k > 0) {
            EXPECT_GT(t3.exponent(k - 1), t3.exponent(k));
        }
        Exponent p = t3.exponent(k);
        p[static_cast<std::size_t>(t3.divisor_var(k))] -= 1;
        EXPECT_EQ(MonomialTable::get(4, 2).exponent(t3.parent(k)), p);
    }
}

TEST(MonomialTable, RejectsWrongDegree) {
    const auto& t = MonomialTable::get(3, 2);
    const Exponent bad{1, 1, 1};
    EXPECT_THROW(t.index_of(bad), PreconditionError);
    const Exponent short_e{2};
    EXPECT_THROW(t.index_of(short_e), DimensionError);
}

TEST(EvalJet, IdentityJet) {
    const auto id = JetMap::identity(2, 1);
    const Eigen::Vector2d x(0.3, -0.2);
    EXPECT_LT((eval_jet(id, x) - x).norm(), 1e-16);
}

TEST(EvalJet, OneDimensionalQuadratic) {
    JetMap j(1, 1, 2);
    j[1].coeffs()(0, 0) = 0.5;
    j[2].coeffs()(0, 0) = 7.142857;
    Eigen::VectorXd x(1);
    x << 0.1;
    EXPECT_NEAR(eval_jet(j, x)[0], 0.05 + 7.142857 * 0.01, 1e-15);
}

TEST(EvalJet, OriginGivesConstantTerm) {
    std::mt19937_64 rng(3);
    const auto j = random_jet(3, 2, 4, rng, false);
    EXPECT_LT((eval_jet(j, Eigen::VectorXd::Zero(3)) - j[0].coeffs().col(0)).norm(), 1e-16);
}

TEST(EvalJet, DimensionMismatchThrows) {
    const auto id = JetMap::identity(2, 1);
    EXPECT_THROW(eval_jet(id, Eigen::VectorXd::Zero(3)), DimensionError);
}

TEST(HomogeneousPoly, Homogeneity) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n = 0; n <= 5; ++n) {
        const auto j = random_jet(3, 2, n, rng, false);
        const auto& p = j[n];
        const Eigen::Vector3d x(u(rng), u(rng), u(rng));
        const Eigen::VectorXd px = p(x);
        for (double s : {0.5, 2.0}) {
            const Eigen::VectorXd lhs = p(Eigen::VectorXd(s * x));
            const Eigen::VectorXd rhs = std::pow(s, n) * px;
            EXPECT_LE((lhs - rhs).norm(), 1e-12 * std::max(1.0, rhs.norm())) << "degree " << n;
        }
    }
}

TEST(ComposeJets, LinearChainRule) {
    Eigen::MatrixXd A(2, 3), B(3, 2);
    A << 1, 2, 3, -1, 0.5, 4;
    B << 0.3, -0.1, 2, 1, -1, 0.25;
    const auto c = compose_jets(JetMap::linear(A, 1), JetMap::linear(B, 1), 1);
    EXPECT_LT((c.linear_part() - A * B).norm(), 1e-14);
}

TEST(ComposeJets, SquareOfPolynomial) {
    JetMap outer(1, 1, 2), inner(1, 1, 2);
    outer[2].coeffs()(0, 0) = 1.0;
    inner[1].coeffs()(0, 0) = 1.0;
    inner[2].coeffs()(0, 0) = 1.0;
    const auto c = compose_jets(outer, inner, 4);
    const double expected[] = {0, 0, 1, 2, 1};
    for (int n = 0; n <= 4; ++n) {
        EXPECT_DOUBLE_EQ(c[n].coeffs()(0, 0), expected[n]) << "degree " << n;
    }
}

TEST(ComposeJets, IdentityInnerTruncates) {
    std::mt19937_64 rng(5);
    const auto j = random_jet(3, 2, 5, rng, false);
    const auto c = compose_jets(j, JetMap::identity(3, 5), 3);
    EXPECT_EQ(c.order(), 3);
    EXPECT_LT(max_diff(c, j.with_order(3)), 1e-15);
}

TEST(ComposeJets, Associativity) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        const int d = 2 + trial % 3;
        const auto a = random_jet(d, d, 3, rng, false);
        const auto b = random_jet(d, d, 3, rng);
        const auto c = random_jet(d, d, 3, rng);
        const int N = 5;
        const auto lhs = compose_jets(compose_jets(a, b, N), c, N);
        const auto rhs = compose_jets(a, compose_jets(b, c, N), N);
        EXPECT_LE(max_diff(lhs, rhs), 1e-12 * std::max(1.0, lhs.max_abs())) << "dim " << d;
    }
}

TEST(ComposeJets, MatchesPointwiseComposition) {
    // At a tiny point the truncation error is O(|x|^{N+1}); the composition must match to that order.
    std::mt19937_64 rng(23);
    const auto a = random_jet(3, 2, 3, rng, false);
    const auto b = random_jet(2, 3, 3, rng);
    const auto c = compose_jets(a, b, 9);
    const Eigen::Vector2d x(1e-2, -2e-2);
    const Eigen::VectorXd direct = eval_jet(a, eval_jet(b, x));
    EXPECT_LT((eval_jet(c, x) - direct).norm(), 1e-15);
}

TEST(ComposeJets, Errors) {
    JetMap outer(2, 1, 2), inner(1, 1, 2);
    EXPECT_THROW(compose_jets(outer, inner, 2), DimensionError);
    JetMap shifted(1, 1, 2);
    shifted[0].coeffs()(0, 0) = 1.0;
    EXPECT_THROW(compose_jets(JetMap(1, 1, 2), shifted, 2), PreconditionError);
}

TEST(InvertJet, RoundTrip) {
    std::mt19937_64 rng(29);
    auto j = random_jet(3, 3, 4, rng);
    j[1].coeffs() += 3.0 * Eigen::MatrixXd::Identity(3, 3);
    const auto h = invert_jet(j, 4);
    const auto id = compose_jets(j, h, 4);
    EXPECT_LT(max_diff(id, JetMap::identity(3, 4)), 1e-12);
}

TEST(JetMap, PackUnpackRoundTrip) {
    std::mt19937_64 rng(31);
    const auto j = random_jet(3, 2, 4, rng);
    const auto back = JetMap::unpack(j.pack(), 3, 2, 4);
    EXPECT_EQ(max_diff(j, back), 0.0);
}

TEST(Splitting, CoordinateAlgebra) {
    const auto s = Splitting::coordinate(4, {2, 0});
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
    EXPECT_LT((s.P0() + s.P1() - I).norm(), 1e-12);
    EXPECT_LT((s.P0() * s.P1()).norm(), 1e-12);
    EXPECT_LT((s.P0_tilde() * s.iota0() - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-12);
    EXPECT_LT((s.P1_tilde() * s.iota1() - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-12);
    EXPECT_LT((s.P0_tilde() * s.iota1()).norm(), 1e-12);
    EXPECT_LT((s.P1_tilde() * s.iota0()).norm(), 1e-12);
    EXPECT_TRUE(s.coordinate_adapted());
    EXPECT_EQ(s.basis0(), (std::vector<int>{0, 2}));
}

TEST(Splitting, GeneralBasisAlgebra) {
    Eigen::MatrixXd T(3, 3);
    T << 1, 0.5, 0, 4, 1, 0.2, 0, -1, 1;
    const auto s = Splitting::from_basis(T, 1);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
    EXPECT_FALSE(s.coordinate_adapted());
    EXPECT_LT((s.P0() + s.P1() - I).norm(), 1e-12);
    EXPECT_LT((s.P0() * s.P1()).norm(), 1e-12);
    EXPECT_LT((s.P0_tilde() * s.iota0() - Eigen::MatrixXd::Identity(1, 1)).norm(), 1e-12);
    EXPECT_LT((s.P0_tilde() * s.iota1()).norm(), 1e-12);
    EXPECT_LT((s.P1_tilde() * s.iota0()).norm(), 1e-12);
    HomogeneousPoly p(2, 3, 1);
    EXPECT_THROW(split_blocks(p, s), PreconditionError);
}

TEST(Blocks, LinearSplit) {
    const auto s = Splitting::coordinate(2, {0});
    HomogeneousPoly p(1, 2, Eigen::MatrixXd((Eigen::MatrixXd(1, 2) << 3.0, -2.0).finished()));
    const auto blocks = split_blocks(p, s);
    ASSERT_EQ(blocks.size(), 2u);
    const auto& b0 = blocks.at(BlockIndex::canonical(1, 0));
    const auto& b1 = blocks.at(BlockIndex::canonical(1, 1));
    EXPECT_EQ(b0.coeffs()(0, 0), 3.0);
    EXPECT_EQ(b0.coeffs()(0, 1), 0.0);
    EXPECT_EQ(b1.coeffs()(0, 0), 0.0);
    EXPECT_EQ(b1.coeffs()(0, 1), -2.0);
}

TEST(Blocks, MixedMonomialHasWeightOne) {
    const auto s = Splitting::coordinate(2, {0});
    HomogeneousPoly p(2, 2, 1);
    p.set_coeff(Exponent{1, 1}, Eigen::VectorXd::Ones(1));
    const auto blocks = split_blocks(p, s);
    EXPECT_TRUE(blocks.at(BlockIndex::canonical(2, 0)).is_zero());
    EXPECT_FALSE(blocks.at(BlockIndex::canonical(2, 1)).is_zero());
    EXPECT_TRUE(blocks.at(BlockIndex::canonical(2, 2)).is_zero());
    EXPECT_EQ(BlockIndex::canonical(2, 1).weight(), 1);
}

TEST(Blocks, RoundTripAndLinearity) {
    std::mt19937_64 rng(41);
    const auto s = Splitting::coordinate(4, {1, 3});
    for (int n = 1; n <= 5; ++n) {
        const auto a = random_jet(4, 2, n, rng)[n];
        const auto b = random_jet(4, 2, n, rng)[n];
        const auto back = merge_blocks(split_blocks(a, s), s);
        EXPECT_LE((back.coeffs() - a.coeffs()).cwiseAbs().maxCoeff(), 1e-13);

        auto ba = split_blocks(a, s);
        const auto bb = split_blocks(b, s);
        const auto bsum = split_blocks(a + 2.0 * b, s);
        for (auto& [k, v] : ba) {
            v += 2.0 * bb.at(k);
            EXPECT_LE((v.coeffs() - bsum.at(k).coeffs()).cwiseAbs().maxCoeff(), 1e-14);
        }
    }
}

TEST(Blocks, MergeRejectsForeignMonomials) {
    const auto s = Splitting::coordinate(2, {0});
    BlockMap blocks;
    HomogeneousPoly wrong(2, 2, 1);
    wrong.set_coeff(Exponent{2, 0}, Eigen::VectorXd::Ones(1));
    blocks.emplace(BlockIndex::canonical(2, 1), wrong);
    EXPECT_THROW(merge_blocks(blocks, s), PreconditionError);
    blocks.clear();
    blocks.emplace(BlockIndex::canonical(2, 0), HomogeneousPoly(2, 2, 1));
    blocks.emplace(BlockIndex::canonical(3, 0), HomogeneousPoly(3, 2, 1));
    EXPECT_THROW(merge_blocks(blocks, s), PreconditionError);
}
