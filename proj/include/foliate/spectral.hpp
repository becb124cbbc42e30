#pragma once

#include <Eigen/Dense>

#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace foliate {

using cplx = std::complex<double>;
using Spectrum = std::vector<cplx>;

/// A product (or sum) closer than this, relative to the target, is resonant.
inline constexpr double kResonanceTol = 1e-8;
/// Gaps between kResonanceTol and this are passed but reported as warnings.
inline constexpr double kNearResonanceTol = 1e-4;

enum class SpectrumOrder {
    Modulus,   ///< descending |mu| (maps)
    RealPart,  ///< descending Re mu (generators)
};

struct SpectrumReport {
    Spectrum eigenvalues;  ///< repeated according to algebraic multiplicity
    double spectral_radius = 0.0;
    bool diagonalizable = true;
    /// 2-norm condition number of the eigenvector matrix (infinite when defective).
    double eigvec_condition = 1.0;
};

SpectrumReport compute_spectrum(const Eigen::MatrixXd& A, SpectrumOrder order = SpectrumOrder::Modulus);

double spectral_radius(const Spectrum& s);

struct EllSelection {
    /// Smallest l >= 1 with max|sigma(A0)^-1| rho(A)^(l+1) < 1.
    std::optional<int> minimal;
    /// Largest admissible l < r_cap.
    std::optional<int> largest;
    bool ell_one_admissible = false;
    double ratio_at_minimal = 0.0;
};

EllSelection select_ell(const Spectrum& sigma0, const Spectrum& sigmaA, int r_cap);

/// Generator analogue: smallest l with (l+1) sup Re sigma(G) < inf Re sigma(G0).
EllSelection select_ell_generator(const Spectrum& sigmaG0, const Spectrum& sigmaG, int r_cap);

struct ResonanceViolation {
    std::string condition;  ///< "H4", "H5", "A4", "A5" or "koopman"
    int n = 0;
    int j = 0;
    Spectrum factors;  ///< the multiset of eigenvalues combined
    cplx value;        ///< their product (maps) or sum (generators)
    cplx target;
    double gap = 0.0;  ///< |value - target| / |target|
};

struct ResonanceReport {
    std::optional<int> ell;
    std::vector<ResonanceViolation> h4_violations;
    std::vector<ResonanceViolation> h5_violations;
    /// Combinations whose gap lies in (tol, kNearResonanceTol].
    std::vector<ResonanceViolation> warnings;
    /// Smallest relative gap over every checked combination (infinity if none were checked).
    double margin = std::numeric_limits<double>::infinity();
    /// Generator growth condition (l+1) sup Re sigma(G) < inf Re sigma(G0); true for map checks.
    bool growth_ok = true;
    double growth_margin = std::numeric_limits<double>::infinity();

    bool passes() const { return growth_ok && h4_violations.empty() && h5_violations.empty(); }
    /// Merge another report into this one (violations appended, margins minimized).
    void absorb(const ResonanceReport& other);
};

/// Products of n-j eigenvalues of sigma0 and j of sigma1 against sigma0, 2 <= n <= ell, 1 <= j <= n.
ResonanceReport check_H4(const Spectrum& sigma0, const Spectrum& sigma1, int ell, double tol_res = kResonanceTol);

/// Products of n eigenvalues of sigma0 against sigma0, m <= n <= ell.
ResonanceReport check_H5(const Spectrum& sigma0, int ell, int m = 2, double tol_res = kResonanceTol);

/// Additive conditions for a generator: growth, mixed sums against sigma(G0), and pure sums
/// n sigma(G0) for m <= n <= ell. Throws PreconditionError if some Re mu >= 0.
ResonanceReport check_generator_conditions(const Spectrum& sigmaG, const Spectrum& sigmaG0, const Spectrum& sigmaG1,
                                           int ell, int m = 2, double tol_res = kResonanceTol);

/// Relative gap used by every resonance check.
double resonance_gap(cplx value, cplx target);

struct SpectralProjection {
    Eigen::MatrixXd P;           ///< projection onto the invariant subspace of the subset
    Eigen::MatrixXd basis;       ///< orthonormal basis of range(P)
    Eigen::MatrixXd complement;  ///< orthonormal basis of ker(P), the complementary invariant subspace
    Spectrum selected;           ///< eigenvalues of A restricted to range(P)
    double gap = 0.0;            ///< min distance between selected and remaining eigenvalues
};

/// Eigenvalues of A within match_tol (relative to max(1,|mu|)) of an element of `subset` are
/// selected. Throws PreconditionError when the selection is not conjugation-closed, is empty,
/// or is separated from the rest of the spectrum by less than gap_tol.
SpectralProjection spectral_projection(const Eigen::MatrixXd& A, const Spectrum& subset, double gap_tol = 1e-8,
                                       double match_tol = 1e-6);

/// [[Re, -Im], [Im, Re]], or the 1x1 matrix [Re] when Im == 0.
Eigen::MatrixXd realify_block(cplx lambda);

struct DecayEstimate {
    double C = 1.0;
    double rate = 0.0;
};

/// Empirical ||A^k|| <= C rate^k for k <= kmax. Throws PreconditionError if rho(A) >= 1.
DecayEstimate estimate_decay(const Eigen::MatrixXd& A, int kmax = 50);

}  // namespace foliate
