#pragma once

#include "foliate/homological.hpp"
#include "foliate/model.hpp"
#include "foliate/ode.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace foliate {

struct SInverseOptions {
    /// eta vanishes to order ell+1 at 0.
    int ell = 1;
    /// Decay rate of f-orbits, |f^j x| <~ rate^j |x|; with ell it fixes the geometric ratio
    /// q = ||A0^-1|| rate^(ell+1).
    double orbit_rate = 0.0;
    double tol = 1e-15;
    int max_terms = 100000;
    /// Orbits leaving this radius are reported as escaping.
    double escape_radius = std::numeric_limits<double>::infinity();
};

struct SInverseResult {
    Eigen::VectorXd value;
    /// Bound on |h(x) - value|: geometric tail plus a summation rounding allowance.
    double tail_bound = 0.0;
    int terms = 0;
    double ratio = 0.0;
};

/// h(x) = sum_j A0^-(j+1) eta(f^j(x)), the solution of A0 h - h o f = eta.
SInverseResult apply_S_inverse(const VecFn& eta, const VecFn& f, const Eigen::MatrixXd& A0, const Eigen::VectorXd& x,
                               const SInverseOptions& options);

struct ScalingMeasurement {
    double delta = 0.0;
    double nonlinearity = 0.0;
    bool ball_invariance = false;
};

struct ScalingCertificate {
    double delta = 1.0;
    /// sup over samples of |f_delta(u) - A u| on the unit ball, f_delta(u) = f(delta u) / delta.
    double nonlinearity_norm = 0.0;
    bool ball_invariance = false;
    /// Measured contraction factor of T; NaN until iterate_T has run.
    double contraction_estimate = std::numeric_limits<double>::quiet_NaN();
    double decay_constant = 1.0;
    double decay_rate = 0.0;
    std::vector<ScalingMeasurement> history;
    bool accepted = false;
};

struct ScalingOptions {
    double target_nonlinearity = 0.1;
    int samples = 256;
    std::uint64_t seed = 0;
    double min_delta = 1e-12;
    /// Orbit length for the invariance check when ||A|| >= 1 (transient growth).
    int orbit_steps = 50;
};

/// Halves delta from 1 until the sampled nonlinearity is below target and the unit ball is
/// invariant on samples. When ||A||_2 < 1 invariance means |f_delta(u)| <= 1; otherwise the
/// orbits must stay within the empirical decay bound C rate^k of estimate_decay.
ScalingCertificate select_scaling(const MapModel& model, const ScalingOptions& options = {});

struct TIterationOptions {
    double delta = 1.0;
    double tol = 1e-14;
    int max_iter = 200;
    /// Orbit truncation: the neglected geometric tail is below this.
    double series_tol = 1e-17;
    /// Decay rate of f; defaults to the spectral radius of Df(0).
    std::optional<double> orbit_rate;
};

struct TIterationResult {
    /// pi^>(delta u_i) in original (unscaled) coordinates for every grid point u_i.
    std::vector<Eigen::VectorXd> pi_gt;
    /// max ratio of successive sup increments (0 when T is constant).
    double contraction = 0.0;
    int iterations = 0;
    std::vector<double> increments;
    /// Bound on the orbit truncation error at the grid points (unscaled).
    double tail_bound = 0.0;
};

/// Fixed-point iteration of T(p) = S^-1(-psi o (pi^<= + p) + pi^<= o f - A0 pi^<=) for the
/// scaled problem on the unit ball, psi = g - A0. S^-1 is applied along the forward orbits of
/// the grid, so p is only ever needed on orbit points.
TIterationResult iterate_T(const SemiconjugacyJet& jet, const MapModel& model, const std::vector<Eigen::VectorXd>& grid,
                           const TIterationOptions& options = {});

struct ExtensionSettings {
    int k_max = 200;
    /// Jet evaluations are trusted on |x| <= delta * inner.
    double inner = 1.0;
};

struct FoliationSolution {
    SemiconjugacyJet jet;
    MapModel model;
    double delta = 1.0;
    ScalingCertificate certificate;
    ExtensionSettings extension;
    /// sup over samples of |g(pi(x)) - pi(f(x))| on |x| <= delta * inner.
    double invariance_residual = 0.0;

    double radius() const { return delta * extension.inner; }
    Eigen::VectorXd pi(const Eigen::VectorXd& x) const { return eval_jet(jet.pi, x); }
    Eigen::VectorXd g(const Eigen::VectorXd& y) const { return eval_jet(jet.g, y); }
};

FoliationSolution make_foliation_solution(const MapModel& model, SemiconjugacyJet jet, ScalingCertificate certificate,
                                          ExtensionSettings extension = {}, int samples = 256,
                                          std::uint64_t seed = 0);

struct NewtonOptions {
    int max_iter = 50;
    double tol = 1e-13;
};

/// Solves g(y) = z from y0 = Dg(0)^-1 z with step halving.
Eigen::VectorXd invert_g(const JetMap& g, const Eigen::VectorXd& z, const NewtonOptions& options = {});

struct ExtensionResult {
    Eigen::VectorXd value;
    int k = 0;
};

/// pi(x) = g^-k(pi_jet(f^k(x))) for the smallest k <= k_max with |f^k(x)| <= radius, or for
/// exactly `forced_k` steps when given.
ExtensionResult extend_by_dynamics(const FoliationSolution& sol, const Eigen::VectorXd& x,
                                   std::optional<int> k_max = std::nullopt, std::optional<int> forced_k = std::nullopt);

}  // namespace foliate
