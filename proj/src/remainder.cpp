#include "foliate/remainder.hpp"

#include "foliate/errors.hpp"
#include "foliate/parallel.hpp"
#include "foliate/sampling.hpp"
#include "foliate/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace foliate {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

double norm2(const Eigen::MatrixXd& M) {
    if (M.size() == 0) {
        return 0.0;
    }
    return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
}

Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& A0, const char* who) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A0);
    if (A0.rows() != A0.cols() || !lu.isInvertible()) {
        throw PreconditionError(std::string(who) + ": A0 must be square and invertible");
    }
    return lu.inverse();
}

double geometric_ratio(const Eigen::MatrixXd& A0inv, double rate, int ell) {
    return norm2(A0inv) * std::pow(rate, ell + 1);
}

}  // namespace

SInverseResult apply_S_inverse(const VecFn& eta, const VecFn& f, const Eigen::MatrixXd& A0, const Eigen::VectorXd& x,
                               const SInverseOptions& options) {
    if (options.ell < 1 || options.orbit_rate < 0.0 || !(options.tol > 0.0)) {
        throw PreconditionError("apply_S_inverse: need ell >= 1, orbit_rate >= 0 and tol > 0");
    }
    const Eigen::MatrixXd A0inv = checked_inverse(A0, "apply_S_inverse");
    const double q = geometric_ratio(A0inv, options.orbit_rate, options.ell);
    if (!(q < 1.0)) {
        throw PreconditionError("apply_S_inverse: non-contractive ratio " + fmt(q));
    }
    SInverseResult out;
    out.ratio = q;
    Eigen::MatrixXd P = A0inv;  // A0^-(j+1)
    Eigen::VectorXd y = x;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(A0.rows());
    double abs_sum = 0.0;
    double envelope = 0.0;  // max_k |term_k| q^-k
    double qj = 1.0;
    for (int j = 0; j < options.max_terms; ++j) {
        if (!(y.norm() <= options.escape_radius)) {
            throw ConvergenceError("apply_S_inverse: orbit left the ball of radius " + fmt(options.escape_radius) +
                                   " after " + std::to_string(j) + " steps");
        }
        const Eigen::VectorXd term = P * eta(y);
        sum += term;
        const double t = term.norm();
        abs_sum += t;
        envelope = qj > 0.0 ? std::max(envelope, t / qj) : envelope;
        out.terms = j + 1;
        const double tail = envelope * qj * q / (1.0 - q);
        if (tail < options.tol / 10.0) {
            out.value = sum;
            const double rounding = 2.0 * static_cast<double>(out.terms + 1) *
                                    std::numeric_limits<double>::epsilon() * (abs_sum + sum.norm());
            out.tail_bound = tail + rounding;
            return out;
        }
        qj *= q;
        P = A0inv * P;
        y = f(y);
    }
    throw ConvergenceError("apply_S_inverse: series did not reach tolerance within " +
                           std::to_string(options.max_terms) + " terms");
}

ScalingCertificate select_scaling(const MapModel& model, const ScalingOptions& options) {
    const int d = model.dim;
    const double rho = compute_spectrum(model.A).spectral_radius;
    if (!(rho < 1.0)) {
        throw PreconditionError("select_scaling: spectral radius " + fmt(rho) + " is not below 1");
    }
    ScalingCertificate cert;
    const DecayEstimate decay = estimate_decay(model.A);
    cert.decay_constant = decay.C;
    cert.decay_rate = decay.rate;
    const bool one_step = norm2(model.A) < 1.0;
    const auto samples = ball_samples(d, options.samples, options.seed);

    for (double delta = 1.0; delta >= options.min_delta; delta *= 0.5) {
        ScalingMeasurement m;
        m.delta = delta;
        try {
            std::vector<Eigen::VectorXd> images(samples.size());
            parallel_for(samples.size(), [&](std::size_t i) { images[i] = model.eval(delta * samples[i]) / delta; });
            for (std::size_t i = 0; i < samples.size(); ++i) {
                m.nonlinearity = std::max(m.nonlinearity, (images[i] - model.A * samples[i]).norm());
            }
            // Invariance is only examined once the nonlinearity target is met.
            bool invariant = m.nonlinearity <= options.target_nonlinearity;
            if (invariant && one_step) {
                for (const auto& fu : images) {
                    invariant = invariant && fu.norm() <= 1.0;
                }
            } else if (invariant) {
                std::vector<char> ok(samples.size(), 1);
                parallel_for(samples.size(), [&](std::size_t i) {
                    const double bound = decay.C * (1.0 + 1e-9) * samples[i].norm();
                    Eigen::VectorXd z = images[i];
                    for (int k = 1; k <= options.orbit_steps; ++k) {
                        if (z.norm() > bound) {
                            ok[i] = 0;
                            return;
                        }
                        z = model.eval(delta * z) / delta;
                    }
                });
                invariant = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
            }
            m.ball_invariance = invariant;
        } catch (const Error&) {
            m.nonlinearity = std::numeric_limits<double>::infinity();
            m.ball_invariance = false;
        }
        cert.history.push_back(m);
        if (m.nonlinearity <= options.target_nonlinearity && m.ball_invariance) {
            cert.delta = delta;
            cert.nonlinearity_norm = m.nonlinearity;
            cert.ball_invariance = true;
            cert.accepted = true;
            return cert;
        }
    }
    throw ConvergenceError("select_scaling: no delta >= " + fmt(options.min_delta) +
                           " reaches nonlinearity target " + fmt(options.target_nonlinearity));
}

TIterationResult iterate_T(const SemiconjugacyJet& jet, const MapModel& model, const std::vector<Eigen::VectorXd>& grid,
                           const TIterationOptions& options) {
    if (grid.empty()) {
        throw PreconditionError("iterate_T: empty grid");
    }
    if (model.dim != jet.dim()) {
        throw DimensionError("iterate_T: model and jet dimensions differ");
    }
    const double delta = options.delta;
    if (!(delta > 0.0)) {
        throw PreconditionError("iterate_T: delta must be positive");
    }
    for (const auto& u : grid) {
        if (u.size() != model.dim || u.norm() > 1.0 + 1e-12) {
            throw PreconditionError("iterate_T: grid points must lie in the unit ball");
        }
    }
    const Eigen::MatrixXd A0 = jet.g[1].coeffs();
    const Eigen::MatrixXd A0inv = checked_inverse(A0, "iterate_T");
    const double rate = options.orbit_rate.value_or(compute_spectrum(model.A).spectral_radius);
    const double q = geometric_ratio(A0inv, rate, jet.ell);
    if (!(q < 1.0)) {
        throw PreconditionError("iterate_T: non-contractive ratio " + fmt(q));
    }
    int L = 1;
    if (q > 0.0) {
        L = static_cast<int>(std::ceil(std::log(options.series_tol) / std::log(q)));
    }
    L = std::clamp(2 * L, 2, 20000);
    const int accurate = L / 2;

    const JetMap& pi = jet.pi;
    JetMap psi = jet.g;
    psi[1].coeffs().setZero();
    const bool psi_zero = psi.max_abs() == 0.0;

    const auto f_d = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd { return model.eval(delta * u) / delta; };
    const auto pi_d = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd { return eval_jet(pi, delta * u) / delta; };
    const auto psi_d = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd { return eval_jet(psi, delta * y) / delta; };

    const std::size_t G = grid.size();
    const int d0 = jet.dim0();
    // Per orbit point: b = pi_d(u_j), a = pi_d(u_{j+1}) - A0 pi_d(u_j).
    std::vector<std::vector<Eigen::VectorXd>> a(G), b(G), P(G);
    for (std::size_t i = 0; i < G; ++i) {
        a[i].resize(static_cast<std::size_t>(L + 1));
        b[i].resize(static_cast<std::size_t>(L + 1));
        P[i].assign(static_cast<std::size_t>(L + 1), Eigen::VectorXd::Zero(d0));
        Eigen::VectorXd u = grid[i];
        Eigen::VectorXd pu = pi_d(u);
        for (int j = 0; j <= L; ++j) {
            const Eigen::VectorXd next = f_d(u);
            const Eigen::VectorXd pnext = pi_d(next);
            b[i][static_cast<std::size_t>(j)] = pu;
            a[i][static_cast<std::size_t>(j)] = pnext - A0 * pu;
            u = next;
            pu = pnext;
        }
    }

    TIterationResult out;
    double prev_inc = 0.0;
    double tail = 0.0;
    const double eps = std::numeric_limits<double>::epsilon();
    const double log_inv_L = static_cast<double>(L + 1) * std::log(norm2(A0inv));
    for (int it = 1; it <= options.max_iter; ++it) {
        double inc = 0.0;
        double scale = 0.0;
        tail = 0.0;
        for (std::size_t i = 0; i < G; ++i) {
            auto& Pi = P[i];
            std::vector<Eigen::VectorXd> eta(static_cast<std::size_t>(L + 1));
            for (int j = 0; j <= L; ++j) {
                const auto sj = static_cast<std::size_t>(j);
                eta[sj] = a[i][sj];
                if (!psi_zero) {
                    eta[sj] -= psi_d(b[i][sj] + Pi[sj]);
                }
            }
            const double end = eta[static_cast<std::size_t>(L)].norm();
            if (end > 0.0) {
                tail = std::max(tail, std::exp(std::log(end) + log_inv_L) / (1.0 - q));
            }
            // Horner form of the orbit series: P_j = A0^-1 (eta_j + P_{j+1}).
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(d0);
            std::vector<Eigen::VectorXd> next(static_cast<std::size_t>(L + 1));
            for (int j = L; j >= 0; --j) {
                acc = A0inv * (eta[static_cast<std::size_t>(j)] + acc);
                next[static_cast<std::size_t>(j)] = acc;
            }
            for (int j = 0; j <= accurate; ++j) {
                const auto sj = static_cast<std::size_t>(j);
                inc = std::max(inc, (next[sj] - Pi[sj]).norm());
                scale = std::max(scale, next[sj].norm());
            }
            Pi = std::move(next);
        }
        out.increments.push_back(inc);
        out.iterations = it;
        if (it == 1 && inc == 0.0) {
            // T(0) = 0: zero is already the fixed point.
            out.iterations = 0;
            break;
        }
        if (it >= 2 && prev_inc > 1e3 * eps * std::max(scale, 1e-300)) {
            out.contraction = std::max(out.contraction, inc / prev_inc);
        }
        prev_inc = inc;
        if (inc <= options.tol * std::max(1.0, scale)) {
            break;
        }
        if (it == options.max_iter) {
            throw ConvergenceError("iterate_T: no convergence in " + std::to_string(options.max_iter) +
                                   " iterations (last increment " + fmt(inc) + ")");
        }
    }
    if (out.contraction >= 1.0) {
        throw ConvergenceError("iterate_T: measured contraction factor " + fmt(out.contraction) + " is not below 1");
    }
    out.pi_gt.reserve(G);
    for (std::size_t i = 0; i < G; ++i) {
        out.pi_gt.push_back(delta * P[i][0]);
    }
    out.tail_bound = delta * tail;
    return out;
}

FoliationSolution make_foliation_solution(const MapModel& model, SemiconjugacyJet jet, ScalingCertificate certificate,
                                          ExtensionSettings extension, int samples, std::uint64_t seed) {
    if (model.dim != jet.dim()) {
        throw DimensionError("make_foliation_solution: model and jet dimensions differ");
    }
    FoliationSolution sol;
    sol.jet = std::move(jet);
    sol.model = model;
    sol.delta = certificate.delta;
    sol.certificate = std::move(certificate);
    sol.extension = extension;
    for (const auto& x : ball_samples(model.dim, samples, seed, sol.radius())) {
        const double r = (sol.g(sol.pi(x)) - sol.pi(model.eval(x))).norm();
        sol.invariance_residual = std::max(sol.invariance_residual, r);
    }
    return sol;
}

Eigen::VectorXd invert_g(const JetMap& g, const Eigen::VectorXd& z, const NewtonOptions& options) {
    const Eigen::MatrixXd L = g.linear_part();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(L);
    Eigen::VectorXd y = lu.solve(z);
    bool linear = true;
    for (int n = 2; n <= g.order(); ++n) {
        linear = linear && g[n].is_zero();
    }
    if (linear) {
        return y;
    }
    const double target = options.tol * std::max(1.0, z.norm());
    Eigen::VectorXd r = eval_jet(g, y) - z;
    for (int it = 0; it < options.max_iter; ++it) {
        if (r.norm() <= target) {
            return y;
        }
        const Eigen::VectorXd step = jet_jacobian(g, y).partialPivLu().solve(r);
        double t = 1.0;
        Eigen::VectorXd trial = y - step;
        Eigen::VectorXd rt = eval_jet(g, trial) - z;
        while (rt.norm() > r.norm() && t > 1e-6) {
            t *= 0.5;
            trial = y - t * step;
            rt = eval_jet(g, trial) - z;
        }
        y = trial;
        r = rt;
    }
    if (r.norm() <= target) {
        return y;
    }
    throw ConvergenceError("invert_g: Newton iteration did not converge (residual " + fmt(r.norm()) + ")");
}

ExtensionResult extend_by_dynamics(const FoliationSolution& sol, const Eigen::VectorXd& x, std::optional<int> k_max,
                                   std::optional<int> forced_k) {
    if (x.size() != sol.model.dim) {
        throw DimensionError("extend_by_dynamics: point dimension does not match the model");
    }
    const int limit = k_max.value_or(sol.extension.k_max);
    ExtensionResult out;
    Eigen::VectorXd y = x;
    if (forced_k) {
        if (*forced_k < 0) {
            throw PreconditionError("extend_by_dynamics: forced k must be nonnegative");
        }
        for (int k = 0; k < *forced_k; ++k) {
            y = sol.model.eval(y);
        }
        out.k = *forced_k;
    } else {
        while (y.norm() > sol.radius()) {
            if (out.k >= limit) {
                throw ConvergenceError("extend_by_dynamics: orbit did not enter the ball of radius " +
                                       fmt(sol.radius()) + " within " + std::to_string(limit) + " steps");
            }
            y = sol.model.eval(y);
            ++out.k;
        }
    }
    out.value = sol.pi(y);
    for (int k = 0; k < out.k; ++k) {
        out.value = invert_g(sol.jet.g, out.value);
    }
    return out;
}

}  // namespace foliate
