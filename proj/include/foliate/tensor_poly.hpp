#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace foliate {

using Exponent = std::vector<int>;

/// Number of monomials of total degree `degree` in `dim` variables, C(dim+degree-1, degree).
std::size_t monomial_count(int dim, int degree);

/// Graded-lex table of the monomials of one fixed degree.
///
/// Within a degree, exponents are ordered lexicographically descending, so for
/// two variables at degree 2 the order is x0^2, x0 x1, x1^2. Tables are built
/// once per (dim, degree) and shared; lookups are thread-safe.
class MonomialTable {
public:
    static const MonomialTable& get(int dim, int degree);

    int dim() const noexcept { return dim_; }
    int degree() const noexcept { return degree_; }
    std::size_t size() const noexcept { return exponents_.size(); }

    const Exponent& exponent(std::size_t k) const { return exponents_[k]; }
    std::size_t index_of(std::span<const int> e) const;

    /// For degree >= 1: index (in the degree-1 table) of x^e / x_v, where v = divisor_var(k).
    std::size_t parent(std::size_t k) const { return parent_[k]; }
    int divisor_var(std::size_t k) const { return var_[k]; }

    MonomialTable(int dim, int degree);

private:
    int dim_;
    int degree_;
    std::vector<Exponent> exponents_;
    std::vector<std::size_t> parent_;
    std::vector<int> var_;
};

/// index_of(e_a + e_b) in the degree (a+b) table for every pair of monomials of degrees a and b.
/// Row-major in (ia, ib). Cached per (dim, a, b).
const std::vector<std::uint32_t>& product_table(int dim, int deg_a, int deg_b);

/// A homogeneous polynomial map R^in_dim -> R^out_dim of fixed degree n, stored as an
/// out_dim x monomial_count(in_dim, n) coefficient matrix in graded-lex column order.
class HomogeneousPoly {
public:
    HomogeneousPoly() = default;
    HomogeneousPoly(int degree, int in_dim, int out_dim);
    HomogeneousPoly(int degree, int in_dim, Eigen::MatrixXd coeffs);

    int degree() const noexcept { return degree_; }
    int in_dim() const noexcept { return in_dim_; }
    int out_dim() const noexcept { return static_cast<int>(coeffs_.rows()); }
    std::size_t size() const noexcept { return static_cast<std::size_t>(coeffs_.cols()); }

    const MonomialTable& monomials() const { return MonomialTable::get(in_dim_, degree_); }
    const Eigen::MatrixXd& coeffs() const noexcept { return coeffs_; }
    Eigen::MatrixXd& coeffs() noexcept { return coeffs_; }

    /// Coefficient vector of x^e.
    Eigen::VectorXd coeff(std::span<const int> e) const;
    void set_coeff(std::span<const int> e, const Eigen::VectorXd& value);

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;

    bool is_zero() const { return coeffs_.size() == 0 || coeffs_.cwiseAbs().maxCoeff() == 0.0; }
    double max_abs() const { return coeffs_.size() == 0 ? 0.0 : coeffs_.cwiseAbs().maxCoeff(); }

    HomogeneousPoly& operator+=(const HomogeneousPoly& other);
    HomogeneousPoly& operator-=(const HomogeneousPoly& other);
    HomogeneousPoly& operator*=(double s) { coeffs_ *= s; return *this; }

private:
    int degree_ = 0;
    int in_dim_ = 1;
    Eigen::MatrixXd coeffs_;
};

HomogeneousPoly operator+(HomogeneousPoly a, const HomogeneousPoly& b);
HomogeneousPoly operator-(HomogeneousPoly a, const HomogeneousPoly& b);
HomogeneousPoly operator*(double s, HomogeneousPoly p);

/// Truncated Taylor expansion: homogeneous components of degrees 0..N.
class JetMap {
public:
    JetMap() = default;
    JetMap(int in_dim, int out_dim, int order);
    explicit JetMap(std::vector<HomogeneousPoly> components);

    static JetMap identity(int dim, int order);
    static JetMap linear(const Eigen::MatrixXd& L, int order);

    int in_dim() const noexcept { return in_dim_; }
    int out_dim() const noexcept { return out_dim_; }
    int order() const noexcept { return static_cast<int>(components_.size()) - 1; }

    const HomogeneousPoly& operator[](int n) const { return components_.at(static_cast<std::size_t>(n)); }
    HomogeneousPoly& operator[](int n) { return components_.at(static_cast<std::size_t>(n)); }
    const std::vector<HomogeneousPoly>& components() const noexcept { return components_; }

    Eigen::MatrixXd linear_part() const;
    /// Same map truncated (or zero-padded) to the given order.
    JetMap with_order(int order) const;

    /// Coefficients of degrees 1..N stacked into one vector (the constant term is excluded).
    Eigen::VectorXd pack() const;
    static JetMap unpack(const Eigen::VectorXd& v, int in_dim, int out_dim, int order);

    double max_abs() const;

    JetMap& operator+=(const JetMap& other);
    JetMap& operator-=(const JetMap& other);
    JetMap& operator*=(double s);

private:
    int in_dim_ = 0;
    int out_dim_ = 0;
    std::vector<HomogeneousPoly> components_;
};

JetMap operator+(JetMap a, const JetMap& b);
JetMap operator-(JetMap a, const JetMap& b);
JetMap operator*(double s, JetMap j);

/// Sum of all components evaluated at x.
Eigen::VectorXd eval_jet(const JetMap& j, const Eigen::VectorXd& x);

/// Jacobian of the polynomial x -> sum_n j_n(x).
Eigen::MatrixXd jet_jacobian(const JetMap& j, const Eigen::VectorXd& x);

/// Degree <= N part of outer o inner. The inner map must vanish at 0.
JetMap compose_jets(const JetMap& outer, const JetMap& inner, int order);

/// L o j for a matrix L (applied to the output side).
JetMap left_multiply(const Eigen::MatrixXd& L, const JetMap& j);

/// Degree-by-degree inverse of a jet R^d -> R^d with invertible linear part and zero constant.
JetMap invert_jet(const JetMap& j, int order);

/// X = X0 (+) X1 together with the projections and inclusions.
///
/// Either coordinate-adapted (X0 spanned by a subset of coordinate axes) or given by an
/// explicit change of basis whose first dim0 columns span X0 and remaining columns span X1.
class Splitting {
public:
    static Splitting coordinate(int dim, std::vector<int> x0_indices);
    static Splitting from_basis(const Eigen::MatrixXd& basis, int dim0);

    int dim() const noexcept { return static_cast<int>(P0_.rows()); }
    int dim0() const noexcept { return static_cast<int>(iota0_.cols()); }
    int dim1() const noexcept { return static_cast<int>(iota1_.cols()); }

    bool coordinate_adapted() const noexcept { return adapted_; }
    /// Coordinate indices of X0 and X1 (only meaningful when coordinate_adapted()).
    const std::vector<int>& basis0() const noexcept { return basis0_; }
    const std::vector<int>& basis1() const noexcept { return basis1_; }
    /// Per-coordinate flag: true if the coordinate belongs to X1.
    const std::vector<bool>& x1_mask() const noexcept { return x1_mask_; }

    const Eigen::MatrixXd& P0() const noexcept { return P0_; }
    const Eigen::MatrixXd& P1() const noexcept { return P1_; }
    const Eigen::MatrixXd& iota0() const noexcept { return iota0_; }
    const Eigen::MatrixXd& iota1() const noexcept { return iota1_; }
    const Eigen::MatrixXd& P0_tilde() const noexcept { return P0t_; }
    const Eigen::MatrixXd& P1_tilde() const noexcept { return P1t_; }
    /// [iota0 | iota1]
    Eigen::MatrixXd basis() const;

private:
    Splitting() = default;
    void finish();

    bool adapted_ = false;
    std::vector<int> basis0_, basis1_;
    std::vector<bool> x1_mask_;
    Eigen::MatrixXd P0_, P1_, iota0_, iota1_, P0t_, P1t_;
};

/// One multi-index class alpha in {0,1}^n. Monomial storage is symmetric, so only the class
/// |alpha| = weight matters; split_blocks keys its output by the canonical representative
/// (0,...,0,1,...,1).
struct BlockIndex {
    std::vector<bool> alpha;

    static BlockIndex canonical(int degree, int weight);
    int degree() const noexcept { return static_cast<int>(alpha.size()); }
    int weight() const noexcept;

    auto operator<=>(const BlockIndex&) const = default;
};

using BlockMap = std::map<BlockIndex, HomogeneousPoly>;

/// Number of exponent slots falling in X1 coordinates.
int monomial_weight(std::span<const int> e, const std::vector<bool>& x1_mask);

/// Partition the monomials of p by weight class. Every class 0..degree is present.
BlockMap split_blocks(const HomogeneousPoly& p, const Splitting& s);

/// Inverse of split_blocks.
HomogeneousPoly merge_blocks(const BlockMap& blocks, const Splitting& s);

}  // namespace foliate
