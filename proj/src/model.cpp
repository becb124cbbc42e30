#include "foliate/model.hpp"

#include "foliate/errors.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <cstdio>
#include <string>

namespace foliate {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

// Mixed partial d^e f(0) by a tensor-product central stencil of step h (error O(h^2)).
Eigen::VectorXd central_partial(const VecFn& f, int dim, const Exponent& e, double h) {
    std::vector<int> vars;
    for (int i = 0; i < dim; ++i) {
        if (e[static_cast<std::size_t>(i)] > 0) {
            vars.push_back(i);
        }
    }
    std::vector<int> m(vars.size(), 0);
    Eigen::VectorXd acc;
    while (true) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
        double w = 1.0;
        for (std::size_t v = 0; v < vars.size(); ++v) {
            const int k = e[static_cast<std::size_t>(vars[v])];
            x[vars[v]] = (0.5 * k - m[v]) * h;
            w *= ((m[v] % 2) ? -1.0 : 1.0) * binomial(k, m[v]);
        }
        const Eigen::VectorXd fx = f(x);
        if (acc.size() == 0) {
            acc = Eigen::VectorXd::Zero(fx.size());
        }
        acc += w * fx;
        std::size_t p = 0;
        while (p < vars.size()) {
            if (++m[p] <= e[static_cast<std::size_t>(vars[p])]) {
                break;
            }
            m[p] = 0;
            ++p;
        }
        if (p == vars.size()) {
            break;
        }
    }
    int n = 0;
    for (int v : e) {
        n += v;
    }
    return acc / std::pow(h, n);
}

Eigen::VectorXd taylor_coefficient(const VecFn& f, int dim, const Exponent& e) {
    int n = 0;
    double fact = 1.0;
    for (int v : e) {
        n += v;
        for (int i = 2; i <= v; ++i) {
            fact *= i;
        }
    }
    const double h = n == 1 ? 1e-3 : n == 2 ? 5e-3 : n == 3 ? 1e-2 : 2e-2;
    const Eigen::VectorXd coarse = central_partial(f, dim, e, h);
    const Eigen::VectorXd fine = central_partial(f, dim, e, 0.5 * h);
    return (4.0 * fine - coarse) / 3.0 / fact;
}

Eigen::MatrixXd fd_jacobian(const VecFn& f, int dim) {
    Eigen::MatrixXd J;
    for (int i = 0; i < dim; ++i) {
        Exponent e(static_cast<std::size_t>(dim), 0);
        e[static_cast<std::size_t>(i)] = 1;
        const Eigen::VectorXd col = taylor_coefficient(f, dim, e);
        if (J.size() == 0) {
            J = Eigen::MatrixXd::Zero(col.size(), dim);
        }
        J.col(i) = col;
    }
    return J;
}

void check_fixed_point(const Eigen::VectorXd& f0, double tol, const char* what) {
    if (!(f0.norm() <= tol)) {
        throw PreconditionError(std::string(what) + ": fixed point residual " + fmt(f0.norm()) +
                                " exceeds tolerance " + fmt(tol));
    }
}

// Nearest-neighbour matching of two multisets of equal size; returns the largest distance.
double multiset_distance(const Spectrum& a, Spectrum b) {
    double worst = 0.0;
    for (const auto& z : a) {
        auto best = std::min_element(b.begin(), b.end(),
                                     [&](const cplx& u, const cplx& v) { return std::abs(u - z) < std::abs(v - z); });
        worst = std::max(worst, std::abs(*best - z));
        b.erase(best);
    }
    return worst;
}

}  // namespace

MapModel make_map_model(VecFn eval, int dim, std::optional<JetMap> jet, int N_jet, double fixed_point_tol) {
    if (dim < 1) {
        throw DimensionError("make_map_model: dimension must be positive");
    }
    check_fixed_point(eval(Eigen::VectorXd::Zero(dim)), fixed_point_tol, "make_map_model");
    MapModel m;
    m.dim = dim;
    m.fixed_point_tol = fixed_point_tol;
    if (jet) {
        if (jet->in_dim() != dim || jet->out_dim() != dim) {
            throw DimensionError("make_map_model: jet dimensions do not match the model");
        }
        check_fixed_point(jet->operator[](0).coeffs().col(0), fixed_point_tol, "make_map_model (jet)");
        m.jet = jet->with_order(std::max(N_jet, 1));
        m.jet[0].coeffs().setZero();
        const Eigen::MatrixXd fd = fd_jacobian(eval, dim);
        const Eigen::MatrixXd A = m.jet.linear_part();
        const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
        if ((fd - A).cwiseAbs().maxCoeff() > 1e-6 * scale) {
            throw PreconditionError("make_map_model: jet/eval mismatch, linear part differs from finite differences by " +
                                    fmt((fd - A).cwiseAbs().maxCoeff()));
        }
    } else {
        if (N_jet > 4) {
            throw PreconditionError("make_map_model: finite-difference jets are limited to degree 4; supply a jet");
        }
        m.jet = JetMap(dim, dim, std::max(N_jet, 1));
        for (int n = 1; n <= m.jet.order(); ++n) {
            const auto& table = MonomialTable::get(dim, n);
            for (std::size_t k = 0; k < table.size(); ++k) {
                m.jet[n].coeffs().col(static_cast<Eigen::Index>(k)) = taylor_coefficient(eval, dim, table.exponent(k));
            }
        }
    }
    m.A = m.jet.linear_part();
    m.eval = std::move(eval);
    return m;
}

MapModel make_polynomial_map(const JetMap& jet) {
    auto shared = std::make_shared<const JetMap>(jet);
    MapModel m = make_map_model([shared](const Eigen::VectorXd& x) { return eval_jet(*shared, x); }, jet.in_dim(),
                                jet, jet.order());
    m.exact_jet = true;
    return m;
}

FlowModel make_flow_model(VecFn field, JetMap vf_jet, bool polynomial, const IntegratorSettings& integrator,
                          double fixed_point_tol) {
    const int dim = vf_jet.in_dim();
    if (vf_jet.out_dim() != dim || dim < 1) {
        throw DimensionError("make_flow_model: vector field jet must be square");
    }
    check_fixed_point(field(Eigen::VectorXd::Zero(dim)), fixed_point_tol, "make_flow_model");
    check_fixed_point(vf_jet[0].coeffs().col(0), fixed_point_tol, "make_flow_model (jet)");
    FlowModel flow;
    flow.dim = dim;
    flow.vf_jet = std::move(vf_jet);
    flow.vf_jet[0].coeffs().setZero();
    flow.G = flow.vf_jet.linear_part();
    const Eigen::MatrixXd fd = fd_jacobian(field, dim);
    const double scale = std::max(1.0, flow.G.cwiseAbs().maxCoeff());
    if ((fd - flow.G).cwiseAbs().maxCoeff() > 1e-6 * scale) {
        throw PreconditionError("make_flow_model: jet/eval mismatch in the generator");
    }
    flow.vector_field = std::move(field);
    flow.polynomial = polynomial;
    flow.integrator = integrator;
    return flow;
}

FlowModel make_polynomial_flow(const JetMap& vf_jet, const IntegratorSettings& integrator) {
    auto shared = std::make_shared<const JetMap>(vf_jet);
    return make_flow_model([shared](const Eigen::VectorXd& x) { return eval_jet(*shared, x); }, vf_jet, true,
                           integrator);
}

double default_tau(const Spectrum& sigmaG) {
    double m = 0.0;
    for (const auto& z : sigmaG) {
        m = std::max(m, std::abs(z.real()));
    }
    if (m == 0.0) {
        return 1.0;
    }
    return std::clamp(1.0 / (2.0 * m), 1e-2, 1.0);
}

JetMap flow_jet(const FlowModel& flow, double t, int N_jet) {
    if (N_jet < 1) {
        throw PreconditionError("flow_jet: N_jet must be at least 1");
    }
    if (!flow.polynomial && N_jet > flow.vf_jet.order()) {
        throw PreconditionError("flow_jet: N_jet exceeds the order of the supplied vector-field jet");
    }
    const int d = flow.dim;
    const JetMap vf = flow.vf_jet.with_order(N_jet);
    const VecFn transport = [&vf, d, N_jet](const Eigen::VectorXd& packed) {
        const JetMap J = JetMap::unpack(packed, d, d, N_jet);
        return compose_jets(vf, J, N_jet).pack();
    };
    const Eigen::VectorXd y = integrate(transport, JetMap::identity(d, N_jet).pack(), t, flow.integrator);
    if (!y.allFinite()) {
        throw ConvergenceError("flow_jet: jet transport blew up");
    }
    return JetMap::unpack(y, d, d, N_jet);
}

MapModel time_tau_map(const FlowModel& flow, double tau, int N_jet) {
    if (!(tau > 0.0)) {
        throw PreconditionError("time_tau_map: tau must be positive");
    }
    MapModel m;
    m.dim = flow.dim;
    m.jet = flow_jet(flow, tau, N_jet);
    m.A = m.jet.linear_part();
    m.tau = tau;
    auto field = flow.vector_field;
    auto settings = flow.integrator;
    m.eval = [field, settings, tau](const Eigen::VectorXd& x) { return integrate(field, x, tau, settings); };

    const auto sigmaA = compute_spectrum(m.A).eigenvalues;
    Spectrum mapped;
    for (const auto& z : compute_spectrum(flow.G).eigenvalues) {
        mapped.push_back(std::exp(tau * z));
    }
    m.spectral_mapping_error = multiset_distance(mapped, sigmaA);
    if (m.spectral_mapping_error > 1e-6) {
        throw ConvergenceError("time_tau_map: spectral mapping check failed, discrepancy " +
                               fmt(m.spectral_mapping_error));
    }
    m.description = "time-" + fmt(tau) + " map of " + flow.description;
    return m;
}

FlowModel build_chafee_infante(double lambda, int modes) {
    if (modes < 1) {
        throw PreconditionError("build_chafee_infante: need at least one mode");
    }
    const double pi = std::numbers::pi;
    // int_0^pi cos(p x) cos(q x) dx = pi/2 [delta(p-q) + delta(p+q)]
    auto cc = [pi](int p, int q) { return 0.5 * pi * ((p == q ? 1.0 : 0.0) + (p == -q ? 1.0 : 0.0)); };
    // sin a sin b = (cos(a-b) - cos(a+b)) / 2
    auto quartic = [&](int i, int j, int k, int l) {
        return 0.25 * (cc(i - j, k - l) - cc(i - j, k + l) - cc(i + j, k - l) + cc(i + j, k + l));
    };
    JetMap vf(modes, modes, 3);
    for (int i = 0; i < modes; ++i) {
        vf[1].coeffs()(i, i) = lambda - (i + 1.0) * (i + 1.0);
    }
    const auto& cubic = MonomialTable::get(modes, 3);
    Exponent e(static_cast<std::size_t>(modes));
    for (int i = 0; i < modes; ++i) {
        for (int j = 0; j < modes; ++j) {
            for (int k = 0; k < modes; ++k) {
                for (int l = 0; l < modes; ++l) {
                    const double I = quartic(i + 1, j + 1, k + 1, l + 1);
                    if (I == 0.0) {
                        continue;
                    }
                    std::fill(e.begin(), e.end(), 0);
                    ++e[static_cast<std::size_t>(j)];
                    ++e[static_cast<std::size_t>(k)];
                    ++e[static_cast<std::size_t>(l)];
                    vf[3].coeffs()(i, static_cast<Eigen::Index>(cubic.index_of(e))) -= 2.0 / pi * I;
                }
            }
        }
    }
    auto flow = make_polynomial_flow(vf);
    flow.description = "Chafee-Infante Galerkin truncation (lambda = " + fmt(lambda) + ", " +
                       std::to_string(modes) + " modes)";
    return flow;
}

Eigen::VectorXd KolmogorovModel::B(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(advection.size()));
    for (std::size_t i = 0; i < advection.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = u.dot(advection[i] * v);
    }
    return out;
}

KolmogorovModel build_ns_kolmogorov(const KolmogorovOptions& opt) {
    if (opt.cutoff < 1 || opt.reynolds <= 0.0) {
        throw PreconditionError("build_ns_kolmogorov: need cutoff >= 1 and a positive Reynolds number");
    }
    if (opt.forcing_wavenumber < 1 || opt.forcing_wavenumber > opt.cutoff) {
        throw PreconditionError("build_ns_kolmogorov: forcing wavenumber must lie in 1..cutoff");
    }
    KolmogorovModel model;
    const int K = opt.cutoff;
    for (int k1 = 0; k1 <= K; ++k1) {
        for (int k2 = -K; k2 <= K; ++k2) {
            if (k1 > 0 || k2 > 0) {
                model.wavevectors.push_back({k1, k2});
            }
        }
    }
    const int nk = static_cast<int>(model.wavevectors.size());
    const int d = 2 * nk;
    const int Ng = 4 * K + 4;
    const int npts = Ng * Ng;
    const double h = 2.0 * std::numbers::pi / Ng;

    // Basis fields and their gradients on the grid: val[m](p, c), grad[m](p, 2c + l) = d_l e_m,c.
    std::vector<Eigen::MatrixXd> val(static_cast<std::size_t>(d)), grad(static_cast<std::size_t>(d));
    for (int q = 0; q < nk; ++q) {
        const auto [k1, k2] = model.wavevectors[static_cast<std::size_t>(q)];
        const double kn = std::hypot(k1, k2);
        const double px = -k2 / kn * std::numbers::sqrt2, py = k1 / kn * std::numbers::sqrt2;
        for (int type = 0; type < 2; ++type) {
            Eigen::MatrixXd V(npts, 2), D(npts, 4);
            for (int a = 0; a < Ng; ++a) {
                for (int b = 0; b < Ng; ++b) {
                    const int p = a * Ng + b;
                    const double phase = k1 * a * h + k2 * b * h;
                    const double s = type == 0 ? std::cos(phase) : std::sin(phase);
                    const double ds = type == 0 ? -std::sin(phase) : std::cos(phase);
                    V(p, 0) = px * s;
                    V(p, 1) = py * s;
                    D(p, 0) = px * ds * k1;
                    D(p, 1) = px * ds * k2;
                    D(p, 2) = py * ds * k1;
                    D(p, 3) = py * ds * k2;
                }
            }
            val[static_cast<std::size_t>(2 * q + type)] = std::move(V);
            grad[static_cast<std::size_t>(2 * q + type)] = std::move(D);
        }
    }
    // adv(j, k)(p, c) = ((e_j . grad) e_k)_c at grid point p; b_ijk = mean_p e_i . adv(j, k).
    model.advection.assign(static_cast<std::size_t>(d), Eigen::MatrixXd::Zero(d, d));
    for (int j = 0; j < d; ++j) {
        const auto& ej = val[static_cast<std::size_t>(j)];
        for (int k = 0; k < d; ++k) {
            const auto& gk = grad[static_cast<std::size_t>(k)];
            Eigen::MatrixXd adv(npts, 2);
            adv.col(0) = ej.col(0).cwiseProduct(gk.col(0)) + ej.col(1).cwiseProduct(gk.col(1));
            adv.col(1) = ej.col(0).cwiseProduct(gk.col(2)) + ej.col(1).cwiseProduct(gk.col(3));
            for (int i = 0; i < d; ++i) {
                const auto& ei = val[static_cast<std::size_t>(i)];
                const double v = (ei.col(0).dot(adv.col(0)) + ei.col(1).dot(adv.col(1))) / npts;
                model.advection[static_cast<std::size_t>(i)](j, k) = std::abs(v) < 1e-14 ? 0.0 : v;
            }
        }
    }

    const double nu = 1.0 / opt.reynolds;
    const int n = opt.forcing_wavenumber;
    model.laminar_speed = opt.amplitude * opt.reynolds / (n * n);
    // U = U0 sin(n y) e_x = -(U0 / sqrt 2) e_{(0,n),s}.
    const auto it = std::find(model.wavevectors.begin(), model.wavevectors.end(), std::array<int, 2>{0, n});
    const int u_index = 2 * static_cast<int>(it - model.wavevectors.begin()) + 1;
    const double cU = -model.laminar_speed / std::numbers::sqrt2;

    JetMap vf(d, d, 2);
    auto& G = vf[1].coeffs();
    for (int i = 0; i < d; ++i) {
        const auto [k1, k2] = model.wavevectors[static_cast<std::size_t>(i / 2)];
        G(i, i) = -nu * (k1 * k1 + k2 * k2);
        for (int j = 0; j < d; ++j) {
            const auto& b = model.advection[static_cast<std::size_t>(i)];
            G(i, j) -= cU * (b(u_index, j) + b(j, u_index));
        }
    }
    const auto& quad = MonomialTable::get(d, 2);
    for (std::size_t m = 0; m < quad.size(); ++m) {
        const auto& e = quad.exponent(m);
        int j = -1, k = -1;
        for (int v = 0; v < d; ++v) {
            for (int c = 0; c < e[static_cast<std::size_t>(v)]; ++c) {
                (j < 0 ? j : k) = v;
            }
        }
        for (int i = 0; i < d; ++i) {
            const auto& b = model.advection[static_cast<std::size_t>(i)];
            vf[2].coeffs()(i, static_cast<Eigen::Index>(m)) = j == k ? -b(j, j) : -(b(j, k) + b(k, j));
        }
    }
    auto shared = std::make_shared<const KolmogorovModel>(model);
    const Eigen::MatrixXd Gm = G;
    model.flow = make_flow_model(
        [shared, Gm](const Eigen::VectorXd& x) { return Eigen::VectorXd(Gm * x - shared->B(x, x)); }, vf, true);
    model.flow.description = "Kolmogorov flow Galerkin truncation (Re = " + fmt(opt.reynolds) +
                             ", cutoff " + std::to_string(K) + ", forcing wavenumber " + std::to_string(n) + ")";
    return model;
}

Splitting SplitChoice::adapted() const {
    std::vector<int> x0(static_cast<std::size_t>(dim0));
    std::iota(x0.begin(), x0.end(), 0);
    return Splitting::coordinate(dim(), x0);
}

Splitting SplitChoice::original() const { return Splitting::from_basis(T, dim0); }

Eigen::MatrixXd SplitChoice::A_adapted() const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim(), dim());
    M.topLeftCorner(dim0, dim0) = A0;
    M.bottomLeftCorner(dim() - dim0, dim0) = B;
    M.bottomRightCorner(dim() - dim0, dim() - dim0) = A1;
    return M;
}

SplitChoice split_choice_from_basis(const Eigen::MatrixXd& A, const Eigen::MatrixXd& T, int dim0, Spectrum subset) {
    const auto d = A.rows();
    if (A.cols() != d || T.rows() != d || T.cols() != d) {
        throw DimensionError("split_choice_from_basis: matrix sizes do not agree");
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(T);
    if (!lu.isInvertible()) {
        throw PreconditionError("split_choice_from_basis: basis is singular");
    }
    SplitChoice s;
    s.subset = std::move(subset);
    s.dim0 = dim0;
    s.T = T;
    s.Tinv = lu.inverse();
    const Eigen::MatrixXd Ad = s.Tinv * A * T;
    const auto d1 = d - dim0;
    s.A0 = Ad.topLeftCorner(dim0, dim0);
    s.A1 = Ad.bottomRightCorner(d1, d1);
    s.B = Ad.bottomLeftCorner(d1, dim0);
    s.triangularity = d1 > 0 ? Ad.topRightCorner(dim0, d1).norm() : 0.0;
    const double scale = std::max(1.0, A.norm());
    if (s.triangularity > 1e-8 * scale) {
        throw PreconditionError("split_choice_from_basis: X1 is not invariant (block " + fmt(s.triangularity) + ")");
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu0(s.A0);
    if (!lu0.isInvertible()) {
        throw PreconditionError("split_choice_from_basis: A0 is singular");
    }
    return s;
}

SplitChoice make_split_choice(const Eigen::MatrixXd& A, const Spectrum& subset, double gap_tol, double match_tol) {
    const auto proj = spectral_projection(A, subset, gap_tol, match_tol);
    Eigen::MatrixXd T(A.rows(), A.cols());
    T << proj.basis, proj.complement;
    auto s = split_choice_from_basis(A, T, static_cast<int>(proj.basis.cols()), proj.selected);
    s.gap = proj.gap;
    return s;
}

JetMap to_adapted(const JetMap& f, const SplitChoice& split) {
    return left_multiply(split.Tinv, compose_jets(f, JetMap::linear(split.T, 1), f.order()));
}

}  // namespace foliate
