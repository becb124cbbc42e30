#pragma once

#include "foliate/homological.hpp"
#include "foliate/model.hpp"
#include "foliate/remainder.hpp"
#include "foliate/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace foliate {

struct MembershipResult {
    bool member = false;
    double distance = 0.0;
    cplx nearest;
};

MembershipResult eigenvalue_membership(cplx lambda, const Spectrum& sigmaG, double tol = 1e-8);

struct KoopmanHit {
    int n = 0;
    Spectrum factors;  ///< n generator eigenvalues whose sum is within tol of lambda
    double gap = 0.0;
};

struct AdmissibilityReport {
    cplx lambda;
    bool in_spectrum = false;
    double distance = 0.0;
    int ell = 1;
    /// (l+1) sup Re sigma(G) < Re lambda
    bool growth_ok = false;
    /// Sums for 1 <= n <= ell; n = 1 entries restate membership.
    std::vector<KoopmanHit> resonance_hits;
    bool simple = false;
    int multiplicity = 0;

    /// Hits with n >= 2.
    std::vector<KoopmanHit> resonances() const;
    bool passes() const { return in_spectrum && growth_ok && resonances().empty(); }
};

/// Throws PreconditionError if some Re mu >= 0. Relative tolerance as in resonance_gap.
AdmissibilityReport admissibility(cplx lambda, const Spectrum& sigmaG, int ell, double tol = kResonanceTol);

struct KoopmanOptions {
    std::optional<double> tau;
    /// Defaults to the smallest ell with (ell+1) sup Re sigma(G) < Re lambda.
    std::optional<int> ell;
    double membership_tol = 1e-8;
    double resonance_tol = kResonanceTol;
    ScalingOptions scaling;
    /// The domain radius is halved until the sampled relative defect over one time unit is
    /// below this.
    double domain_tol = 1e-7;
    int domain_samples = 64;
    double min_radius = 1e-6;
    ExtensionSettings extension;
    OrderSolveOptions order;
};

/// psi(x) = functional . pi(x), with (pi, g) a normal-form solution for X0 the (generalized)
/// eigenspace of {lambda, conj(lambda)}.
struct KoopmanEigenfunction {
    cplx lambda;
    cplx requested_lambda;
    bool real_valued = true;
    /// pi is realified: functional = (1) for real lambda, (1, i) otherwise.
    bool realified = true;
    /// False for one member of a basis of a multiple eigenvalue's left eigenspace.
    bool canonical = true;
    int basis_index = 0;
    Eigen::RowVectorXcd functional;
    FoliationSolution solution;
    double tau = 0.0;
    double domain_radius = 0.0;
    AdmissibilityReport admissibility;
    /// Map-level nonresonance verdicts agree at tau and 2 tau.
    bool tau_consistent = true;
    std::vector<std::string> warnings;

    /// Jet value, trusted for |x| <= domain_radius.
    cplx value_jet(const Eigen::VectorXd& x) const;
    /// Jet value inside the domain, extension by the time-tau map outside.
    cplx value(const Eigen::VectorXd& x) const;
    Eigen::RowVectorXcd gradient_at_zero() const;
};

/// One eigenfunction per basis vector of the left eigenspace; a single canonical one when
/// lambda is simple, gauged so that Dpsi(0) v = 1 for the unit right eigenvector v whose first
/// largest component is real and positive. Refuses lambda outside sigma(G) and resonant lambda.
std::vector<KoopmanEigenfunction> build_eigenfunctions(const FlowModel& flow, cplx lambda, int N,
                                                       const KoopmanOptions& options = {});

/// First element of build_eigenfunctions; warns when lambda is not simple.
KoopmanEigenfunction build_eigenfunction(const FlowModel& flow, cplx lambda, int N, const KoopmanOptions& options = {});

struct VerifyOptions {
    int n_points = 100;
    double horizon = 5.0;
    int time_samples = 20;
    double tol = 1e-7;
    std::uint64_t seed = 0;
    /// Sample radius; defaults to the eigenfunction's domain radius.
    std::optional<double> radius;
    IntegratorSettings integrator{1e-14, 1e-12, 1e-3, 1e-14, 2'000'000};
    /// A scalar c != 0 applied to psi (gauge check).
    cplx scale = 1.0;
};

struct DefectStats {
    double sup = 0.0;
    double mean = 0.0;
    int points = 0;
    int skipped = 0;
    int evaluations = 0;
    double floor = 0.0;
    double tol = 0.0;
    bool passed = false;
    /// Per-point sup of the relative defect (NaN for skipped points).
    std::vector<double> per_point;
};

/// Relative defect |psi(phi_t x) - e^(lambda t) psi(x)| / max(|psi(x)|, floor) over a t-grid,
/// floor = 1e-14 max |psi| over the samples.
DefectStats verify_eigenfunction(const KoopmanEigenfunction& psi, const FlowModel& flow, const VerifyOptions& options = {});

struct ConjugacyReport {
    bool linear = true;
    /// theta as a jet X0 -> X0; its linear part is C~ C^-1.
    JetMap theta;
    double residual = 0.0;
    int samples = 0;
};

/// theta with pi2 = theta o pi1. Both jets must share X1. Samples are taken on |x| <= radius.
ConjugacyReport conjugacy_between(const SemiconjugacyJet& sol1, const SemiconjugacyJet& sol2, double radius,
                                  int samples = 256, std::uint64_t seed = 0);
ConjugacyReport conjugacy_between(const FoliationSolution& sol1, const FoliationSolution& sol2, int samples = 256,
                                  std::uint64_t seed = 0);

}  // namespace foliate
