#pragma once

#include "foliate/model.hpp"
#include "foliate/spectral.hpp"
#include "foliate/tensor_poly.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <optional>
#include <string>
#include <vector>

namespace foliate {

/// How the weight-0 class (monomials in X0 only) is treated at degrees 2..ell.
///  Foliation:  g_n takes the whole weight-0 right-hand side, pi_(0..0) = 0.
///  NormalForm: g_n = 0 and pi_(0..0) is solved; needs H.5 at every degree.
///  Mixed:      NormalForm where the weight-0 divisors pass, Foliation elsewhere.
enum class GMode { Foliation, NormalForm, Mixed };

std::string to_string(GMode mode);
/// Accepts "foliation", "normal_form", "mixed".
GMode parse_gmode(const std::string& text);

struct ClassRecord {
    int weight = 0;
    int unknowns = 0;
    /// min |mu - product| over the class, from the spectra of A0 and A1 (infinite if the class is empty).
    double min_divisor = 0.0;
    double relative_gap = 0.0;
    /// 1-norm condition estimate of the class operator; 1 when no factorization was needed.
    double condition = 1.0;
    bool solved = false;
    bool sparse = false;
};

struct OrderSolveRecord {
    int degree = 0;
    /// Weight-0 treatment actually used at this degree (Mixed is resolved to one of the others).
    GMode mode = GMode::Foliation;
    /// Degree above ell: g_n is frozen at zero.
    bool g_frozen = false;
    std::vector<ClassRecord> classes;  ///< indexed by weight
    double residual = 0.0;             ///< max |coefficient| of the order-n equation defect, relative to scale
    double scale = 1.0;
    std::vector<std::string> warnings;
};

struct OrderSolveOptions {
    double tol_res = kResonanceTol;
    double near_resonance_tol = kNearResonanceTol;
    double condition_warning = 1e12;
    /// Class operators with fewer nonzeros than this fraction use the sparse LU.
    double sparse_density = 0.05;
    /// Class operators up to this size always use the dense LU.
    long dense_max_size = 300;
    /// Coefficient scale for the relative residual; default max(1, |gamma|, |pi_n|, |g_n|).
    std::optional<double> scale;
    bool g_frozen = false;
};

struct OrderSolution {
    HomogeneousPoly pi_n;  ///< X -> X0, adapted coordinates
    HomogeneousPoly g_n;   ///< X0 -> X0
    OrderSolveRecord record;
};

/// Degree-n part of pi^{<n} o f - g^{<n} o pi^{<n}. Components of pi_partial and g_partial of
/// degree >= n are ignored; both must be complete through degree n-1.
HomogeneousPoly assemble_gamma_n(const JetMap& f_jet, const JetMap& pi_partial, const JetMap& g_partial, int n);

/// Coefficient matrix R of x -> (Ax)^e at degree n: row e holds the coefficients of (Ax)^e.
/// Monomial order is the graded-lex table order.
Eigen::SparseMatrix<double, Eigen::RowMajor> monomial_pullback(const Eigen::MatrixXd& A, int n);

/// Solves g_n(pi_1 x) + A0 pi_n(x) - pi_n(Ax) = gamma(x) in adapted coordinates, pi_1 = [I 0],
/// A = [[A0, 0], [B, A1]], class by class in decreasing weight.
OrderSolution solve_order_n(const HomogeneousPoly& gamma, const Eigen::MatrixXd& A0, const Eigen::MatrixXd& A1,
                            const Eigen::MatrixXd& B, int n, GMode mode, const OrderSolveOptions& options = {});

struct SemiconjugacyJet {
    JetMap pi;          ///< X -> X0 in original coordinates
    JetMap g;           ///< X0 -> X0
    JetMap pi_adapted;  ///< pi in the adapted coordinates z = T^-1 x
    SplitChoice split;
    int ell = 1;
    int N = 1;
    GMode mode = GMode::Foliation;
    /// Output gauge: pi = theta pi_ref, g = theta g_ref theta^-1 with pi_ref_1 = P0~.
    Eigen::MatrixXd theta;
    std::vector<OrderSolveRecord> records;  ///< degrees 2..N
    std::vector<std::string> warnings;

    int dim() const { return pi.in_dim(); }
    int dim0() const { return pi.out_dim(); }
    /// True when every g_n, n >= 2, vanishes.
    bool g_linear() const;
    double max_relative_residual() const;
};

struct SolveJetOptions {
    OrderSolveOptions order;
    /// Optional theta; must be invertible dim0 x dim0.
    std::optional<Eigen::MatrixXd> pi1_choice;
};

/// Orders 2..ell in `mode`, orders ell+1..N with g frozen (g_n = 0).
SemiconjugacyJet solve_jet(const MapModel& model, const SplitChoice& split, int ell, int N, GMode mode,
                           const SolveJetOptions& options = {});

/// Same, from the jet alone (the jet must have order >= N unless `exact` allows zero-padding).
SemiconjugacyJet solve_jet(const JetMap& f_jet, bool exact, const SplitChoice& split, int ell, int N, GMode mode,
                           const SolveJetOptions& options = {});

struct ResidualProfile {
    /// absolute[n] = max |coefficient| of the degree-n part of g o pi - pi o f.
    std::vector<double> absolute;
    /// max(1, largest coefficient among f, pi, g at degrees <= N).
    double scale = 1.0;

    double relative(int n) const { return absolute.at(static_cast<std::size_t>(n)) / scale; }
    double max_relative(int from, int to) const;
};

/// Residual of the semiconjugacy in original coordinates at degrees 0..N.
ResidualProfile jet_residual(const SemiconjugacyJet& jet, const JetMap& f_jet, int N);
ResidualProfile jet_residual(const JetMap& pi, const JetMap& g, const JetMap& f_jet, int N);

/// Replaces (pi, g) by (theta pi, theta g theta^-1).
void apply_gauge(JetMap& pi, JetMap& g, const Eigen::MatrixXd& theta);

}  // namespace foliate
