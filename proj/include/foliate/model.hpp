#pragma once

#include "foliate/ode.hpp"
#include "foliate/spectral.hpp"
#include "foliate/tensor_poly.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace foliate {

/// A map with a fixed point at the origin, together with its jet there.
struct MapModel {
    int dim = 0;
    VecFn eval;
    JetMap jet;
    Eigen::MatrixXd A;
    double fixed_point_tol = 1e-12;
    /// The map equals its jet (polynomial), so the jet may be zero-padded to any order.
    bool exact_jet = false;
    /// Set for time-tau maps of flows.
    std::optional<double> tau;
    /// max |mu - exp(tau nu)| between sigma(A) and exp(tau sigma(G)); time-tau maps only.
    double spectral_mapping_error = 0.0;
    std::string description;
};

struct FlowModel {
    int dim = 0;
    VecFn vector_field;
    JetMap vf_jet;
    Eigen::MatrixXd G;
    /// The field equals its jet exactly (polynomial), so the jet may be padded to any order.
    bool polynomial = false;
    IntegratorSettings integrator;
    std::string description;
};

/// Checks the fixed point and, when `jet` is given, that its linear part matches a
/// finite-difference Jacobian of eval (relative 1e-6). Without a jet, the Taylor coefficients
/// up to N_jet <= 4 are estimated by Richardson-extrapolated central differences.
MapModel make_map_model(VecFn eval, int dim, std::optional<JetMap> jet, int N_jet, double fixed_point_tol = 1e-12);

/// A map whose evaluation is exactly its (polynomial) jet.
MapModel make_polynomial_map(const JetMap& jet);

/// Flow whose vector field is the polynomial `vf_jet`.
FlowModel make_polynomial_flow(const JetMap& vf_jet, const IntegratorSettings& integrator = {});

/// Flow with a separate evaluator; checks F(0) = 0 and the linear part of vf_jet.
FlowModel make_flow_model(VecFn field, JetMap vf_jet, bool polynomial, const IntegratorSettings& integrator = {},
                          double fixed_point_tol = 1e-12);

/// Default tau = 1 / (2 max |Re sigma(G)|), clipped to [1e-2, 1].
double default_tau(const Spectrum& sigmaG);

/// Time-tau map: evaluation by numerical integration, jet by integrating the truncated
/// jet-transport equation J' = vf_jet o J from the identity jet.
MapModel time_tau_map(const FlowModel& flow, double tau, int N_jet);

/// Jet of the time-t map alone.
JetMap flow_jet(const FlowModel& flow, double t, int N_jet);

/// Galerkin truncation of u_t = u_xx + lambda u - u^3 on (0, pi), Dirichlet, sine basis.
FlowModel build_chafee_infante(double lambda, int modes);

struct KolmogorovOptions {
    double reynolds = 10.0;
    int cutoff = 2;            ///< retained wavevectors satisfy |k1|, |k2| <= cutoff
    int forcing_wavenumber = 1;
    double amplitude = 1.0;    ///< forcing amplitude chi; laminar speed is chi Re / n^2
};

struct KolmogorovModel {
    FlowModel flow;
    /// Retained wavevectors; coordinate 2i is the cosine mode and 2i+1 the sine mode of wavevectors[i].
    std::vector<std::array<int, 2>> wavevectors;
    /// b(i, j, k) = <e_i, (e_j . grad) e_k>, stored as b[i] = dim x dim matrix.
    std::vector<Eigen::MatrixXd> advection;
    double laminar_speed = 0.0;

    /// B(u, v)_i = sum_jk b_ijk u_j v_k.
    Eigen::VectorXd B(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
};

/// Divergence-free Fourier-Galerkin truncation of 2-D Navier-Stokes on the 2 pi torus with
/// forcing chi sin(n y) e_x, written for the perturbation of the laminar state.
KolmogorovModel build_ns_kolmogorov(const KolmogorovOptions& options);

/// Splitting data for a chosen spectral subset. Adapted coordinates are z = T^-1 x with
/// T = [X0 basis | X1 basis], where X1 is invariant, so that T^-1 A T = [[A0, 0], [B, A1]].
struct SplitChoice {
    Spectrum subset;
    int dim0 = 0;
    Eigen::MatrixXd T;
    Eigen::MatrixXd Tinv;
    Eigen::MatrixXd A0, A1, B;
    /// || P0~ A iota1 ||, the block that must vanish.
    double triangularity = 0.0;
    double gap = 0.0;

    int dim() const { return static_cast<int>(T.rows()); }
    Splitting adapted() const;
    Splitting original() const;
    Eigen::MatrixXd A_adapted() const;
};

/// X0 = invariant subspace of `subset`, X1 = complementary invariant subspace (ker P).
SplitChoice make_split_choice(const Eigen::MatrixXd& A, const Spectrum& subset, double gap_tol = 1e-8,
                              double match_tol = 1e-6);

/// Split from an explicit basis whose trailing columns span an A-invariant X1.
SplitChoice split_choice_from_basis(const Eigen::MatrixXd& A, const Eigen::MatrixXd& T, int dim0,
                                    Spectrum subset = {});

/// T^-1 o f o T truncated at f's order.
JetMap to_adapted(const JetMap& f, const SplitChoice& split);

}  // namespace foliate
