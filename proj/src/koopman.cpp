#include "foliate/koopman.hpp"

#include "foliate/errors.hpp"
#include "foliate/log.hpp"
#include "foliate/parallel.hpp"
#include "foliate/sampling.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace foliate {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::string fmt(cplx z) {
    if (z.imag() == 0.0) {
        return fmt(z.real());
    }
    return fmt(z.real()) + (z.imag() < 0 ? " - " : " + ") + fmt(std::abs(z.imag())) + "i";
}

// Distinct values of s, keeping the first representative of each cluster.
Spectrum distinct(const Spectrum& s, double tol = 1e-12) {
    Spectrum out;
    for (const auto& z : s) {
        const bool seen = std::any_of(out.begin(), out.end(),
                                      [&](cplx w) { return std::abs(w - z) <= tol * std::max(1.0, std::abs(z)); });
        if (!seen) {
            out.push_back(z);
        }
    }
    return out;
}

// Columns spanning the (numerical) kernel of M; at least the smallest singular direction.
Eigen::MatrixXcd kernel(const Eigen::MatrixXcd& M, double rel_tol) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const Eigen::Index n = M.cols();
    const double thresh = rel_tol * std::max(1.0, s.size() > 0 ? s[0] : 0.0);
    Eigen::Index k = 1;
    while (k < n && s[n - 1 - k] <= thresh) {
        ++k;
    }
    return svd.matrixV().rightCols(k);
}

// Unit vector whose first (near-)largest component is real and positive.
Eigen::VectorXcd canonical_phase(Eigen::VectorXcd v) {
    const double m = v.cwiseAbs().maxCoeff();
    Eigen::Index imax = 0;
    while (std::abs(v(imax)) < (1.0 - 1e-6) * m) {
        ++imax;
    }
    v *= std::abs(v(imax)) / v(imax);
    return v / v.norm();
}

void enumerate_hits(const Spectrum& values, int n, cplx lambda, double tol, std::vector<KoopmanHit>& hits) {
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    const int m = static_cast<int>(values.size());
    std::function<void(int, int, cplx)> rec = [&](int pos, int start, cplx sum) {
        if (pos == n) {
            const double gap = resonance_gap(sum, lambda);
            if (gap <= tol) {
                KoopmanHit h;
                h.n = n;
                for (int i : idx) {
                    h.factors.push_back(values[static_cast<std::size_t>(i)]);
                }
                h.gap = gap;
                hits.push_back(std::move(h));
            }
            return;
        }
        for (int i = start; i < m; ++i) {
            idx[static_cast<std::size_t>(pos)] = i;
            rec(pos + 1, i, sum + values[static_cast<std::size_t>(i)]);
        }
    };
    rec(0, 0, cplx(0.0, 0.0));
}

double max_abs_psi(const std::vector<Eigen::RowVectorXcd>& functionals, const FoliationSolution& sol,
                   const Eigen::VectorXd& x) {
    const Eigen::VectorXcd p = sol.pi(x).cast<cplx>();
    double m = 0.0;
    for (const auto& q : functionals) {
        m = std::max(m, std::abs((q * p)(0)));
    }
    return m;
}

}  // namespace

MembershipResult eigenvalue_membership(cplx lambda, const Spectrum& sigmaG, double tol) {
    MembershipResult r;
    r.distance = std::numeric_limits<double>::infinity();
    for (const auto& mu : sigmaG) {
        const double d = std::abs(lambda - mu);
        if (d < r.distance) {
            r.distance = d;
            r.nearest = mu;
        }
    }
    r.member = r.distance <= tol;
    return r;
}

std::vector<KoopmanHit> AdmissibilityReport::resonances() const {
    std::vector<KoopmanHit> out;
    for (const auto& h : resonance_hits) {
        if (h.n >= 2) {
            out.push_back(h);
        }
    }
    return out;
}

AdmissibilityReport admissibility(cplx lambda, const Spectrum& sigmaG, int ell, double tol) {
    if (ell < 1) {
        throw PreconditionError("admissibility: ell must be at least 1");
    }
    double sup = -std::numeric_limits<double>::infinity();
    for (const auto& mu : sigmaG) {
        sup = std::max(sup, mu.real());
    }
    if (sigmaG.empty() || sup >= 0.0) {
        throw PreconditionError("admissibility: generator spectrum must lie in the open left half-plane");
    }
    AdmissibilityReport rep;
    rep.lambda = lambda;
    rep.ell = ell;
    const auto mem = eigenvalue_membership(lambda, sigmaG, tol * std::max(1.0, std::abs(lambda)));
    rep.in_spectrum = mem.member;
    rep.distance = mem.distance;
    rep.growth_ok = (ell + 1) * sup < lambda.real();
    rep.multiplicity = static_cast<int>(std::count_if(sigmaG.begin(), sigmaG.end(), [&](cplx mu) {
        return std::abs(mu - lambda) <= 1e-6 * std::max(1.0, std::abs(lambda));
    }));
    rep.simple = rep.multiplicity == 1;
    const Spectrum values = distinct(sigmaG);
    for (int n = 1; n <= ell; ++n) {
        enumerate_hits(values, n, lambda, tol, rep.resonance_hits);
    }
    return rep;
}

cplx KoopmanEigenfunction::value_jet(const Eigen::VectorXd& x) const {
    return (functional * solution.pi(x).cast<cplx>())(0);
}

cplx KoopmanEigenfunction::value(const Eigen::VectorXd& x) const {
    if (x.norm() <= domain_radius) {
        return value_jet(x);
    }
    return (functional * extend_by_dynamics(solution, x).value.cast<cplx>())(0);
}

Eigen::RowVectorXcd KoopmanEigenfunction::gradient_at_zero() const {
    return functional * solution.jet.pi.linear_part().cast<cplx>();
}

std::vector<KoopmanEigenfunction> build_eigenfunctions(const FlowModel& flow, cplx lambda, int N,
                                                       const KoopmanOptions& options) {
    const Spectrum sigmaG = compute_spectrum(flow.G, SpectrumOrder::RealPart).eigenvalues;
    const auto mem = eigenvalue_membership(lambda, sigmaG, options.membership_tol * std::max(1.0, std::abs(lambda)));
    if (!mem.member) {
        throw PreconditionError("build_eigenfunction: lambda = " + fmt(lambda) +
                                " is not an eigenvalue of the generator (nearest " + fmt(mem.nearest) +
                                ", distance " + fmt(mem.distance) + ")");
    }
    cplx mu = mem.nearest;
    const bool real_valued = std::abs(mu.imag()) <= 1e-10 * std::max(1.0, std::abs(mu));
    if (real_valued) {
        mu = mu.real();
    }
    const double match = 1e-6 * std::max(1.0, std::abs(mu));
    Spectrum omega, rest;
    for (const auto& z : sigmaG) {
        const bool inside = std::abs(z - mu) <= match || std::abs(z - std::conj(mu)) <= match;
        (inside ? omega : rest).push_back(z);
    }

    const int ell = options.ell ? *options.ell : *select_ell_generator(omega, sigmaG, 1000).minimal;
    if (N < ell) {
        throw PreconditionError("build_eigenfunction: N = " + std::to_string(N) + " is below ell = " +
                                std::to_string(ell));
    }
    AdmissibilityReport adm = admissibility(mu, sigmaG, ell, options.resonance_tol);
    if (!adm.growth_ok) {
        throw PreconditionError("build_eigenfunction: growth condition (ell+1) sup Re sigma(G) < Re lambda fails "
                                "for ell = " + std::to_string(ell));
    }
    if (const auto res = adm.resonances(); !res.empty()) {
        std::string terms;
        for (const auto& f : res.front().factors) {
            terms += (terms.empty() ? "" : " + ") + fmt(f);
        }
        throw ResonanceError("build_eigenfunction: lambda = " + fmt(mu) + " is resonant at n = " +
                                 std::to_string(res.front().n) + " (" + terms + "); the normal-form solve is refused",
                             res.front().n, 0);
    }

    const double tau = options.tau.value_or(default_tau(sigmaG));
    const MapModel map = time_tau_map(flow, tau, N);
    Spectrum omega_map;
    for (const auto& z : omega) {
        omega_map.push_back(std::exp(tau * z));
    }
    const SplitChoice split = make_split_choice(map.A, omega_map);
    const int d = flow.dim;
    const int d0 = split.dim0;
    const Eigen::MatrixXd T0 = split.T.leftCols(d0);

    std::vector<std::string> warnings;
    bool tau_consistent = true;
    {
        Spectrum s0, s1, s0b, s1b;
        for (const auto& z : omega) {
            s0.push_back(std::exp(tau * z));
            s0b.push_back(std::exp(2.0 * tau * z));
        }
        for (const auto& z : rest) {
            s1.push_back(std::exp(tau * z));
            s1b.push_back(std::exp(2.0 * tau * z));
        }
        const bool at_tau = rest.empty() || check_H4(s0, s1, ell, options.resonance_tol).passes();
        const bool at_2tau = rest.empty() || check_H4(s0b, s1b, ell, options.resonance_tol).passes();
        tau_consistent = at_tau == at_2tau;
        if (!tau_consistent) {
            warnings.push_back("nonresonance verdicts differ between tau and 2 tau");
        }
    }

    const Eigen::MatrixXcd Gc = flow.G.cast<cplx>();
    const Eigen::MatrixXcd shifted = Gc - mu * Eigen::MatrixXcd::Identity(d, d);
    const double ktol = 1e-8;
    const Eigen::MatrixXcd left = kernel(shifted.transpose(), ktol);  // columns are w^T
    Eigen::MatrixXcd right = kernel(shifted, ktol);
    for (Eigen::Index j = 0; j < right.cols(); ++j) {
        right.col(j) = canonical_phase(right.col(j));
    }

    SolveJetOptions sopts;
    sopts.order = options.order;
    std::vector<Eigen::RowVectorXcd> functionals;
    bool realified = false;
    if (adm.simple) {
        Eigen::RowVectorXcd w = left.col(0).transpose();
        w /= (w * right.col(0))(0);
        Eigen::MatrixXd K(real_valued ? 1 : 2, d);
        K.row(0) = w.real();
        if (!real_valued) {
            K.row(1) = w.imag();
        }
        if (K.rows() != d0) {
            throw PreconditionError("build_eigenfunction: X0 dimension does not match the realified eigenvalue");
        }
        sopts.pi1_choice = K * T0;
        Eigen::RowVectorXcd q(d0);
        q(0) = 1.0;
        if (!real_valued) {
            q(1) = cplx(0.0, 1.0);
        }
        functionals.push_back(q);
        realified = true;
    } else {
        warnings.push_back("lambda has algebraic multiplicity " + std::to_string(adm.multiplicity) +
                           "; one non-canonical eigenfunction per left eigenvector");
        for (Eigen::Index k = 0; k < left.cols(); ++k) {
            Eigen::RowVectorXcd w = left.col(k).transpose();
            Eigen::Index best = 0;
            double best_abs = -1.0;
            for (Eigen::Index j = 0; j < right.cols(); ++j) {
                const double a = std::abs((w * right.col(j))(0));
                if (a > best_abs) {
                    best_abs = a;
                    best = j;
                }
            }
            if (best_abs > 1e-10) {
                w /= (w * right.col(best))(0);
            }
            functionals.push_back(w * T0.cast<cplx>());
        }
    }
    for (const auto& w : warnings) {
        log_info("koopman: " + w);
    }

    SemiconjugacyJet jet = solve_jet(map, split, ell, N, GMode::NormalForm, sopts);
    ScalingCertificate cert = select_scaling(map, options.scaling);

    // Largest radius (halving from delta) whose one-time-unit defect meets domain_tol.
    ExtensionSettings ext = options.extension;
    ext.inner = 1.0;
    FoliationSolution probe;
    probe.jet = jet;
    probe.model = map;
    probe.delta = cert.delta;
    probe.extension = ext;
    const int k_steps = std::max(1, static_cast<int>(std::lround(1.0 / tau)));
    const double T1 = k_steps * tau;
    IntegratorSettings tight{1e-14, 1e-12, 1e-3, 1e-14, flow.integrator.max_steps};
    double radius = cert.delta;
    for (;;) {
        const auto pts = ball_samples(d, options.domain_samples, options.scaling.seed, radius);
        std::vector<double> defect(pts.size(), 0.0), size(pts.size(), 0.0);
        std::vector<Eigen::VectorXd> ends(pts.size());
        parallel_for(pts.size(), [&](std::size_t i) { ends[i] = integrate(flow.vector_field, pts[i], T1, tight); });
        double scale = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            size[i] = max_abs_psi(functionals, probe, pts[i]);
            scale = std::max(scale, size[i]);
        }
        const double floor = 1e-14 * scale;
        double sup = 0.0;
        const cplx growth = std::exp(mu * T1);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Eigen::VectorXcd p0 = probe.pi(pts[i]).cast<cplx>();
            const Eigen::VectorXcd p1 = probe.pi(ends[i]).cast<cplx>();
            for (const auto& q : functionals) {
                const double num = std::abs((q * p1)(0) - growth * (q * p0)(0));
                sup = std::max(sup, num / std::max(std::abs((q * p0)(0)), floor));
            }
        }
        log_debug("koopman: radius " + fmt(radius) + " defect " + fmt(sup));
        if (sup <= options.domain_tol) {
            break;
        }
        if (radius * 0.5 < options.min_radius) {
            warnings.push_back("domain radius reached its minimum with defect " + fmt(sup));
            break;
        }
        radius *= 0.5;
    }
    ext.inner = radius / cert.delta;
    FoliationSolution sol = make_foliation_solution(map, std::move(jet), cert, ext, options.scaling.samples,
                                                    options.scaling.seed);

    std::vector<KoopmanEigenfunction> out;
    for (std::size_t k = 0; k < functionals.size(); ++k) {
        KoopmanEigenfunction ef;
        ef.lambda = mu;
        ef.requested_lambda = lambda;
        ef.real_valued = real_valued;
        ef.realified = realified;
        ef.canonical = adm.simple;
        ef.basis_index = static_cast<int>(k);
        ef.functional = functionals[k];
        ef.solution = sol;
        ef.tau = tau;
        ef.domain_radius = radius;
        ef.admissibility = adm;
        ef.tau_consistent = tau_consistent;
        ef.warnings = warnings;
        out.push_back(std::move(ef));
    }
    return out;
}

KoopmanEigenfunction build_eigenfunction(const FlowModel& flow, cplx lambda, int N, const KoopmanOptions& options) {
    auto all = build_eigenfunctions(flow, lambda, N, options);
    return std::move(all.front());
}

DefectStats verify_eigenfunction(const KoopmanEigenfunction& psi, const FlowModel& flow, const VerifyOptions& options) {
    if (options.n_points <= 0) {
        throw PreconditionError("verify_eigenfunction: empty sample set");
    }
    if (options.horizon < 0.0 || options.time_samples < 1) {
        throw PreconditionError("verify_eigenfunction: need horizon >= 0 and at least one time sample");
    }
    if (options.scale == cplx(0.0, 0.0)) {
        throw PreconditionError("verify_eigenfunction: the gauge scalar must be nonzero");
    }
    const double radius = options.radius.value_or(psi.domain_radius);
    const auto pts = ball_samples(flow.dim, options.n_points, options.seed, radius);
    std::vector<double> times;
    if (options.horizon == 0.0) {
        times.push_back(0.0);
    } else {
        for (int k = 1; k <= options.time_samples; ++k) {
            times.push_back(options.horizon * k / options.time_samples);
        }
    }

    DefectStats st;
    st.tol = options.tol;
    std::vector<cplx> psi0(pts.size());
    double scale = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        psi0[i] = options.scale * psi.value(pts[i]);
        scale = std::max(scale, std::abs(psi0[i]));
    }
    st.floor = 1e-14 * scale;

    st.per_point.assign(pts.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> sums(pts.size(), 0.0);
    parallel_for(pts.size(), [&](std::size_t i) {
        try {
            const auto traj = integrate_to_times(flow.vector_field, pts[i], times, options.integrator);
            const double denom = std::max(std::abs(psi0[i]), st.floor);
            double worst = 0.0, sum = 0.0;
            for (std::size_t k = 0; k < times.size(); ++k) {
                const cplx v = options.scale * psi.value(traj[k]);
                const double dfc = std::abs(v - std::exp(psi.lambda * times[k]) * psi0[i]) / denom;
                worst = std::max(worst, dfc);
                sum += dfc;
            }
            st.per_point[i] = worst;
            sums[i] = sum;
        } catch (const Error&) {
        }
    });
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (std::isnan(st.per_point[i])) {
            ++st.skipped;
            continue;
        }
        ++st.points;
        st.sup = std::max(st.sup, st.per_point[i]);
        total += sums[i];
    }
    st.evaluations = st.points * static_cast<int>(times.size());
    st.mean = st.evaluations > 0 ? total / st.evaluations : 0.0;
    st.passed = st.points > 0 && st.sup <= options.tol;
    return st;
}

ConjugacyReport conjugacy_between(const SemiconjugacyJet& sol1, const SemiconjugacyJet& sol2, double radius,
                                  int samples, std::uint64_t seed) {
    if (sol1.dim() != sol2.dim() || sol1.dim0() != sol2.dim0()) {
        throw PreconditionError("conjugacy_between: incompatible splittings (dimensions differ)");
    }
    const int d = sol1.dim();
    const int d0 = sol1.dim0();
    const Eigen::MatrixXd T0 = sol1.split.T.leftCols(d0);
    const Eigen::MatrixXd T1 = sol1.split.T.rightCols(d - d0);
    const Eigen::MatrixXd P2 = sol2.pi.linear_part();
    if (d > d0 && (P2 * T1).norm() > 1e-8 * std::max(1.0, P2.norm())) {
        throw PreconditionError("conjugacy_between: incompatible splittings (X1 differs, |Dpi2(0) X1| = " +
                                fmt((P2 * T1).norm()) + ")");
    }
    const Eigen::MatrixXd C = sol1.pi.linear_part() * T0;
    const Eigen::MatrixXd Ct = P2 * T0;
    ConjugacyReport rep;
    rep.linear = sol1.g_linear() && sol2.g_linear();
    if (rep.linear) {
        rep.theta = JetMap::linear(Ct * C.inverse(), 1);
    } else {
        const int N = std::min(sol1.pi.order(), sol2.pi.order());
        const JetMap iota = JetMap::linear(T0, N);
        const JetMap p1 = compose_jets(sol1.pi, iota, N);
        const JetMap p2 = compose_jets(sol2.pi, iota, N);
        rep.theta = compose_jets(p2, invert_jet(p1, N), N);
    }
    const auto pts = ball_samples(d, samples, seed, radius);
    for (const auto& x : pts) {
        const double r = (eval_jet(sol2.pi, x) - eval_jet(rep.theta, eval_jet(sol1.pi, x))).norm();
        rep.residual = std::max(rep.residual, r);
    }
    rep.samples = static_cast<int>(pts.size());
    return rep;
}

ConjugacyReport conjugacy_between(const FoliationSolution& sol1, const FoliationSolution& sol2, int samples,
                                  std::uint64_t seed) {
    return conjugacy_between(sol1.jet, sol2.jet, std::min(sol1.radius(), sol2.radius()), samples, seed);
}

}  // namespace foliate
