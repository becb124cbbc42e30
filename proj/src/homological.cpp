#include "foliate/homological.hpp"

#include "foliate/errors.hpp"
#include "foliate/log.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <random>

namespace foliate {

namespace {

using SparseRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SparseCol = Eigen::SparseMatrix<double, Eigen::ColMajor>;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

void multiset_products(const Spectrum& s, int start, int left, cplx acc, std::vector<cplx>& out) {
    if (left == 0) {
        out.push_back(acc);
        return;
    }
    for (std::size_t i = static_cast<std::size_t>(start); i < s.size(); ++i) {
        multiset_products(s, static_cast<int>(i), left - 1, acc * s[i], out);
    }
}

std::vector<cplx> multiset_products(const Spectrum& s, int k) {
    std::vector<cplx> out;
    multiset_products(s, 0, k, cplx(1.0, 0.0), out);
    return out;
}

struct Divisor {
    double absolute = std::numeric_limits<double>::infinity();
    double relative = std::numeric_limits<double>::infinity();
};

/// Eigenvalues of Pi -> A0 Pi - Pi R_ww are mu - (n-w products from sigma0) * (w products from sigma1).
Divisor class_divisor(const Spectrum& sigma0, const Spectrum& sigma1, int n, int w) {
    Divisor d;
    const auto p0 = multiset_products(sigma0, n - w);
    const auto p1 = multiset_products(sigma1, w);
    for (const cplx& mu : sigma0) {
        for (const cplx& a : p0) {
            for (const cplx& b : p1) {
                const double gap = std::abs(mu - a * b);
                d.absolute = std::min(d.absolute, gap);
                d.relative = std::min(d.relative, gap / std::abs(mu));
            }
        }
    }
    return d;
}

Spectrum eigenvalues_or_empty(const Eigen::MatrixXd& M) {
    if (M.rows() == 0) {
        return {};
    }
    return compute_spectrum(M).eigenvalues;
}

double max_abs(const Eigen::MatrixXd& M) { return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff(); }

struct ClassSolve {
    Eigen::MatrixXd X;
    double condition = 1.0;
    bool sparse = false;
};

/// Row-by-row solve after a complex Schur factorization A0 = U T U^*: with Y = U^* X,
/// y_k (t_kk - Rww) = (U^* rhs)_k - sum_(l>k) t_kl y_l, one m x m factorization per distinct t_kk.
ClassSolve solve_class_schur(const Eigen::MatrixXd& A0, const SparseRow& R, const std::vector<std::size_t>& cols,
                             const std::vector<long>& local, const Eigen::MatrixXd& rhs, int n, int w) {
    const long d0 = A0.rows();
    const long m = static_cast<long>(cols.size());
    Eigen::MatrixXd Rw = Eigen::MatrixXd::Zero(m, m);
    for (long i = 0; i < m; ++i) {
        for (SparseRow::InnerIterator it(R, static_cast<long>(cols[static_cast<std::size_t>(i)])); it; ++it) {
            const long j = local[static_cast<std::size_t>(it.col())];
            if (j >= 0) {
                Rw(i, j) = it.value();
            }
        }
    }
    const Eigen::ComplexSchur<Eigen::MatrixXd> schur(A0);
    const Eigen::MatrixXcd& U = schur.matrixU();
    const Eigen::MatrixXcd& T = schur.matrixT();
    const Eigen::MatrixXcd D = U.adjoint() * rhs.cast<cplx>();
    const Eigen::MatrixXcd RwT = Rw.transpose().cast<cplx>();
    Eigen::MatrixXcd Y(d0, m);
    ClassSolve out;
    std::optional<Eigen::PartialPivLU<Eigen::MatrixXcd>> lu;
    cplx factored_at(std::numeric_limits<double>::quiet_NaN(), 0.0);
    for (long k = d0 - 1; k >= 0; --k) {
        const cplx t = T(k, k);
        if (!lu || std::abs(t - factored_at) > 1e-15 * std::max(1.0, std::abs(t))) {
            Eigen::MatrixXcd M = -RwT;
            M.diagonal().array() += t;
            lu.emplace(M);
            factored_at = t;
            const double rc = lu->rcond();
            if (!(rc > 0.0) || !std::isfinite(rc)) {
                throw ResonanceError("solve_order_n: singular class operator at degree " + std::to_string(n) +
                                         ", weight " + std::to_string(w),
                                     n, w);
            }
            out.condition = std::max(out.condition, 1.0 / rc);
        }
        Eigen::RowVectorXcd r = D.row(k);
        for (long l = k + 1; l < d0; ++l) {
            r -= T(k, l) * Y.row(l);
        }
        Y.row(k) = lu->solve(r.transpose()).transpose();
    }
    out.X = (U * Y).real();
    if (!out.X.allFinite()) {
        throw ResonanceError("solve_order_n: singular class operator at degree " + std::to_string(n) + ", weight " +
                                 std::to_string(w),
                             n, w);
    }
    return out;
}

/// A0 X - X Rww = rhs through the Kronecker form (I (x) A0 - Rww^T (x) I) vec X = vec rhs.
ClassSolve solve_class(const Eigen::MatrixXd& A0, const SparseRow& R, const std::vector<std::size_t>& cols,
                       const std::vector<long>& local, const Eigen::MatrixXd& rhs, const OrderSolveOptions& options,
                       int n, int w) {
    const long d0 = A0.rows();
    const long m = static_cast<long>(cols.size());
    const long size = d0 * m;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(size * d0));
    for (long j = 0; j < m; ++j) {
        for (long a = 0; a < d0; ++a) {
            for (long b = 0; b < d0; ++b) {
                if (A0(a, b) != 0.0) {
                    trips.emplace_back(j * d0 + a, j * d0 + b, A0(a, b));
                }
            }
        }
    }
    for (long i = 0; i < m; ++i) {
        for (SparseRow::InnerIterator it(R, static_cast<long>(cols[static_cast<std::size_t>(i)])); it; ++it) {
            const long j = local[static_cast<std::size_t>(it.col())];
            if (j < 0) {
                continue;
            }
            for (long a = 0; a < d0; ++a) {
                trips.emplace_back(j * d0 + a, i * d0 + a, -it.value());
            }
        }
    }
    SparseCol K(size, size);
    K.setFromTriplets(trips.begin(), trips.end());
    K.makeCompressed();

    const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), size);
    ClassSolve out;
    const double density = static_cast<double>(K.nonZeros()) / (static_cast<double>(size) * static_cast<double>(size));
    const auto singular = [&] {
        return ResonanceError("solve_order_n: singular class operator at degree " + std::to_string(n) + ", weight " +
                                  std::to_string(w),
                              n, w);
    };
    Eigen::VectorXd x;
    if (d0 > 1 && size > options.dense_max_size && density > options.sparse_density) {
        return solve_class_schur(A0, R, cols, local, rhs, n, w);
    }
    if (size <= options.dense_max_size || density > options.sparse_density) {
        const Eigen::MatrixXd Kd(K);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(Kd);
        const double rc = lu.rcond();
        if (!(rc > 0.0) || !std::isfinite(rc)) {
            throw singular();
        }
        out.condition = 1.0 / rc;
        x = lu.solve(b);
    } else {
        out.sparse = true;
        Eigen::SparseLU<SparseCol, Eigen::COLAMDOrdering<int>> lu;
        lu.analyzePattern(K);
        lu.factorize(K);
        if (lu.info() != Eigen::Success) {
            throw singular();
        }
        x = lu.solve(b);
        // Lower bound on ||K^-1||_1 from a few fixed sign vectors.
        double norm1 = 0.0;
        for (long c = 0; c < K.outerSize(); ++c) {
            double s = 0.0;
            for (SparseCol::InnerIterator it(K, c); it; ++it) {
                s += std::abs(it.value());
            }
            norm1 = std::max(norm1, s);
        }
        std::mt19937_64 rng(12345);
        std::bernoulli_distribution coin(0.5);
        double inv = 0.0;
        for (int t = 0; t < 3; ++t) {
            Eigen::VectorXd v(size);
            for (long k = 0; k < size; ++k) {
                v[k] = coin(rng) ? 1.0 : -1.0;
            }
            inv = std::max(inv, lu.solve(v).lpNorm<1>() / static_cast<double>(size));
        }
        out.condition = norm1 * inv;
    }
    if (!x.allFinite()) {
        throw singular();
    }
    out.X = Eigen::Map<const Eigen::MatrixXd>(x.data(), d0, m);
    return out;
}

}  // namespace

std::string to_string(GMode mode) {
    switch (mode) {
        case GMode::Foliation: return "foliation";
        case GMode::NormalForm: return "normal_form";
        case GMode::Mixed: return "mixed";
    }
    return "foliation";
}

GMode parse_gmode(const std::string& text) {
    if (text == "foliation") return GMode::Foliation;
    if (text == "normal_form") return GMode::NormalForm;
    if (text == "mixed") return GMode::Mixed;
    throw ConfigError("unknown g mode '" + text + "' (expected foliation, normal_form or mixed)");
}

HomogeneousPoly assemble_gamma_n(const JetMap& f_jet, const JetMap& pi_partial, const JetMap& g_partial, int n) {
    if (n < 2) {
        throw PreconditionError("assemble_gamma_n: degree must be at least 2");
    }
    if (f_jet.in_dim() != f_jet.out_dim() || pi_partial.in_dim() != f_jet.in_dim() ||
        g_partial.in_dim() != pi_partial.out_dim() || g_partial.out_dim() != pi_partial.out_dim()) {
        throw DimensionError("assemble_gamma_n: dimensions of f, pi and g do not chain");
    }
    if (pi_partial.order() < n - 1 || g_partial.order() < n - 1) {
        throw PreconditionError("assemble_gamma_n: pi and g must be complete through degree " + std::to_string(n - 1));
    }
    if (f_jet.order() < n) {
        throw PreconditionError("assemble_gamma_n: f jet has order below " + std::to_string(n));
    }
    const JetMap pi_low = pi_partial.with_order(n - 1);
    const JetMap g_low = g_partial.with_order(n - 1);
    HomogeneousPoly gamma = compose_jets(pi_low, f_jet, n)[n];
    gamma -= compose_jets(g_low, pi_low, n)[n];
    return gamma;
}

SparseRow monomial_pullback(const Eigen::MatrixXd& A, int n) {
    const int d = static_cast<int>(A.rows());
    if (A.cols() != d || d < 1) {
        throw DimensionError("monomial_pullback: matrix must be square and nonempty");
    }
    if (n < 1) {
        throw PreconditionError("monomial_pullback: degree must be at least 1");
    }
    const auto& t1 = MonomialTable::get(d, 1);
    std::vector<std::size_t> var_index(static_cast<std::size_t>(d));
    for (int v = 0; v < d; ++v) {
        Exponent e(static_cast<std::size_t>(d), 0);
        e[static_cast<std::size_t>(v)] = 1;
        var_index[static_cast<std::size_t>(v)] = t1.index_of(e);
    }
    std::vector<Eigen::Triplet<double>> trips;
    for (int v = 0; v < d; ++v) {
        for (int j = 0; j < d; ++j) {
            if (A(v, j) != 0.0) {
                trips.emplace_back(static_cast<int>(var_index[static_cast<std::size_t>(v)]),
                                   static_cast<int>(var_index[static_cast<std::size_t>(j)]), A(v, j));
            }
        }
    }
    SparseRow R1(d, d);
    R1.setFromTriplets(trips.begin(), trips.end());
    SparseRow R = R1;
    for (int k = 2; k <= n; ++k) {
        const auto& table = MonomialTable::get(d, k);
        const auto& prod = product_table(d, k - 1, 1);
        const std::size_t size = table.size();
        std::vector<double> acc(size, 0.0);
        std::vector<char> mark(size, 0);
        std::vector<std::size_t> touched;
        trips.clear();
        for (std::size_t e = 0; e < size; ++e) {
            const auto parent = static_cast<long>(table.parent(e));
            const auto v = static_cast<long>(var_index[static_cast<std::size_t>(table.divisor_var(e))]);
            touched.clear();
            for (SparseRow::InnerIterator a(R, parent); a; ++a) {
                for (SparseRow::InnerIterator b(R1, v); b; ++b) {
                    const std::size_t c =
                        prod[static_cast<std::size_t>(a.col()) * static_cast<std::size_t>(d) + static_cast<std::size_t>(b.col())];
                    if (!mark[c]) {
                        mark[c] = 1;
                        touched.push_back(c);
                    }
                    acc[c] += a.value() * b.value();
                }
            }
            std::sort(touched.begin(), touched.end());
            for (std::size_t c : touched) {
                if (acc[c] != 0.0) {
                    trips.emplace_back(static_cast<int>(e), static_cast<int>(c), acc[c]);
                }
                acc[c] = 0.0;
                mark[c] = 0;
            }
        }
        SparseRow next(static_cast<long>(size), static_cast<long>(size));
        next.setFromTriplets(trips.begin(), trips.end());
        R = std::move(next);
    }
    return R;
}

OrderSolution solve_order_n(const HomogeneousPoly& gamma, const Eigen::MatrixXd& A0, const Eigen::MatrixXd& A1,
                            const Eigen::MatrixXd& B, int n, GMode mode, const OrderSolveOptions& options) {
    const int d0 = static_cast<int>(A0.rows());
    const int d1 = static_cast<int>(A1.rows());
    const int d = d0 + d1;
    if (d0 < 1 || A0.cols() != d0 || A1.cols() != d1 || B.rows() != d1 || B.cols() != d0) {
        throw DimensionError("solve_order_n: block sizes of A0, A1, B are inconsistent");
    }
    if (n < 2 || gamma.degree() != n) {
        throw PreconditionError("solve_order_n: gamma must be homogeneous of degree n >= 2");
    }
    if (gamma.in_dim() != d || gamma.out_dim() != d0) {
        throw DimensionError("solve_order_n: gamma must map R^" + std::to_string(d) + " to R^" + std::to_string(d0));
    }

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
    A.topLeftCorner(d0, d0) = A0;
    A.bottomLeftCorner(d1, d0) = B;
    A.bottomRightCorner(d1, d1) = A1;

    const auto& table = MonomialTable::get(d, n);
    const std::size_t M = table.size();
    std::vector<std::vector<std::size_t>> classes(static_cast<std::size_t>(n + 1));
    std::vector<int> weight_of(M);
    for (std::size_t k = 0; k < M; ++k) {
        const auto& e = table.exponent(k);
        int w = 0;
        for (int i = d0; i < d; ++i) {
            w += e[static_cast<std::size_t>(i)];
        }
        weight_of[k] = w;
        classes[static_cast<std::size_t>(w)].push_back(k);
    }

    const Spectrum sigma0 = eigenvalues_or_empty(A0);
    const Spectrum sigma1 = eigenvalues_or_empty(A1);
    const SparseRow R = monomial_pullback(A, n);

    OrderSolution out;
    out.pi_n = HomogeneousPoly(n, d, d0);
    out.g_n = HomogeneousPoly(n, d0, d0);
    auto& rec = out.record;
    rec.degree = n;
    rec.g_frozen = options.g_frozen;
    rec.classes.resize(static_cast<std::size_t>(n + 1));

    Eigen::MatrixXd& Pi = out.pi_n.coeffs();
    const auto& g_table = MonomialTable::get(d0, n);
    std::vector<long> local(M, -1);

    for (int w = n; w >= 0; --w) {
        const auto& cols = classes[static_cast<std::size_t>(w)];
        auto& cr = rec.classes[static_cast<std::size_t>(w)];
        cr.weight = w;
        cr.unknowns = d0 * static_cast<int>(cols.size());
        if (cols.empty()) {
            cr.min_divisor = std::numeric_limits<double>::infinity();
            cr.relative_gap = std::numeric_limits<double>::infinity();
            continue;
        }
        const Divisor div = class_divisor(sigma0, sigma1, n, w);
        cr.min_divisor = div.absolute;
        cr.relative_gap = div.relative;
        log_debug("degree " + std::to_string(n) + " weight " + std::to_string(w) + ": min divisor " +
                  fmt(div.absolute) + ", relative " + fmt(div.relative));

        // Right-hand side: gamma plus the coupling from the heavier classes solved so far.
        const Eigen::MatrixXd coupled = Pi * R;
        Eigen::MatrixXd rhs(d0, static_cast<long>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) {
            rhs.col(static_cast<long>(c)) =
                gamma.coeffs().col(static_cast<long>(cols[c])) + coupled.col(static_cast<long>(cols[c]));
        }

        GMode use = GMode::NormalForm;
        if (w == 0) {
            if (options.g_frozen) {
                use = GMode::NormalForm;
            } else if (mode == GMode::Mixed) {
                use = div.relative > options.tol_res ? GMode::NormalForm : GMode::Foliation;
            } else {
                use = mode;
            }
            rec.mode = use;
            if (use == GMode::Foliation) {
                for (std::size_t c = 0; c < cols.size(); ++c) {
                    const auto& e = table.exponent(cols[c]);
                    const Exponent e0(e.begin(), e.begin() + d0);
                    out.g_n.coeffs().col(static_cast<long>(g_table.index_of(e0))) = rhs.col(static_cast<long>(c));
                }
                continue;
            }
        }

        if (div.relative <= options.tol_res) {
            const std::string what = w == 0 ? "H.5" : "H.4";
            throw ResonanceError("solve_order_n: resonant divisor at degree " + std::to_string(n) + ", weight " +
                                     std::to_string(w) + " (" + what + " fails, relative gap " + fmt(div.relative) +
                                     ")",
                                 n, w);
        }
        if (div.relative <= options.near_resonance_tol) {
            rec.warnings.push_back("near resonance at degree " + std::to_string(n) + ", weight " + std::to_string(w) +
                                   ": relative gap " + fmt(div.relative));
        }
        if (max_abs(rhs) == 0.0) {
            continue;
        }
        for (std::size_t c = 0; c < cols.size(); ++c) {
            local[cols[c]] = static_cast<long>(c);
        }
        ClassSolve cs = solve_class(A0, R, cols, local, rhs, options, n, w);
        for (std::size_t c = 0; c < cols.size(); ++c) {
            local[cols[c]] = -1;
            Pi.col(static_cast<long>(cols[c])) = cs.X.col(static_cast<long>(c));
        }
        cr.solved = true;
        cr.sparse = cs.sparse;
        cr.condition = cs.condition;
        if (cs.condition > options.condition_warning) {
            rec.warnings.push_back("ill-conditioned class at degree " + std::to_string(n) + ", weight " +
                                   std::to_string(w) + ": condition estimate " + fmt(cs.condition));
        }
    }

    // Defect of the full order-n equation.
    Eigen::MatrixXd defect = A0 * Pi - Pi * R - gamma.coeffs();
    for (std::size_t c : classes[0]) {
        const auto& e = table.exponent(c);
        const Exponent e0(e.begin(), e.begin() + d0);
        defect.col(static_cast<long>(c)) += out.g_n.coeffs().col(static_cast<long>(g_table.index_of(e0)));
    }
    rec.scale = std::max({options.scale.value_or(1.0), 1.0, gamma.max_abs(), out.pi_n.max_abs(), out.g_n.max_abs()});
    rec.residual = max_abs(defect) / rec.scale;
    for (const auto& wmsg : rec.warnings) {
        log_info("warning: " + wmsg);
    }
    return out;
}

bool SemiconjugacyJet::g_linear() const {
    for (int n = 2; n <= g.order(); ++n) {
        if (!g[n].is_zero()) {
            return false;
        }
    }
    return true;
}

double SemiconjugacyJet::max_relative_residual() const {
    double r = 0.0;
    for (const auto& rec : records) {
        r = std::max(r, rec.residual);
    }
    return r;
}

void apply_gauge(JetMap& pi, JetMap& g, const Eigen::MatrixXd& theta) {
    const int d0 = g.in_dim();
    if (theta.rows() != d0 || theta.cols() != d0) {
        throw DimensionError("apply_gauge: theta must be " + std::to_string(d0) + " x " + std::to_string(d0));
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(theta);
    if (!lu.isInvertible()) {
        throw PreconditionError("apply_gauge: theta is not invertible");
    }
    const Eigen::MatrixXd theta_inv = lu.inverse();
    pi = left_multiply(theta, pi);
    g = compose_jets(left_multiply(theta, g), JetMap::linear(theta_inv, 1), g.order());
}

SemiconjugacyJet solve_jet(const MapModel& model, const SplitChoice& split, int ell, int N, GMode mode,
                           const SolveJetOptions& options) {
    return solve_jet(model.jet, model.exact_jet, split, ell, N, mode, options);
}

SemiconjugacyJet solve_jet(const JetMap& f_jet, bool exact, const SplitChoice& split, int ell, int N, GMode mode,
                           const SolveJetOptions& options) {
    if (ell < 1 || N < ell) {
        throw PreconditionError("solve_jet: need 1 <= ell <= N");
    }
    const int d = split.dim();
    const int d0 = split.dim0;
    if (f_jet.in_dim() != d || f_jet.out_dim() != d) {
        throw DimensionError("solve_jet: model dimension does not match the split");
    }
    if (f_jet.order() < N && !exact) {
        throw PreconditionError("solve_jet: jet order " + std::to_string(f_jet.order()) + " is below N = " +
                                std::to_string(N) + " and the map is not polynomial");
    }
    if (!f_jet[0].is_zero()) {
        throw PreconditionError("solve_jet: the jet has a nonzero constant term");
    }

    SemiconjugacyJet out;
    out.split = split;
    out.ell = ell;
    out.N = N;
    out.mode = mode;

    const JetMap f_ad = to_adapted(f_jet.with_order(N), split);
    {
        const Spectrum sigma0 = eigenvalues_or_empty(split.A0);
        const Spectrum sigmaA = compute_spectrum(split.A_adapted()).eigenvalues;
        double inv0 = 0.0;
        for (const cplx& z : sigma0) {
            inv0 = std::max(inv0, 1.0 / std::abs(z));
        }
        const double ratio = inv0 * std::pow(spectral_radius(sigmaA), ell + 1);
        if (!(ratio < 1.0)) {
            out.warnings.push_back("rho(A0^-1) rho(A)^(ell+1) = " + fmt(ratio) + " is not below 1 for ell = " +
                                   std::to_string(ell));
        }
    }

    JetMap pi(d, d0, N);
    pi[1].coeffs().leftCols(d0) = Eigen::MatrixXd::Identity(d0, d0);
    JetMap g(d0, d0, N);
    g[1].coeffs() = split.A0;

    double base_scale = 1.0;
    for (int n = 2; n <= N; ++n) {
        base_scale = std::max({base_scale, f_ad[n].max_abs(), f_ad[n - 1].max_abs()});
        const HomogeneousPoly gamma = assemble_gamma_n(f_ad, pi, g, n);
        OrderSolveOptions opts = options.order;
        opts.g_frozen = n > ell;
        opts.scale = std::max(base_scale, opts.scale.value_or(1.0));
        const GMode use = opts.g_frozen ? GMode::NormalForm : mode;
        OrderSolution sol = solve_order_n(gamma, split.A0, split.A1, split.B, n, use, opts);
        pi[n] = std::move(sol.pi_n);
        g[n] = std::move(sol.g_n);
        base_scale = std::max({base_scale, pi[n].max_abs(), g[n].max_abs()});
        for (const auto& wmsg : sol.record.warnings) {
            out.warnings.push_back(wmsg);
        }
        out.records.push_back(std::move(sol.record));
    }

    out.theta = options.pi1_choice.value_or(Eigen::MatrixXd::Identity(d0, d0));
    if (options.pi1_choice) {
        apply_gauge(pi, g, out.theta);
    }
    out.pi_adapted = pi;
    out.pi = compose_jets(pi, JetMap::linear(split.Tinv, 1), N);
    out.g = std::move(g);
    for (const auto& wmsg : out.warnings) {
        log_debug("solve_jet: " + wmsg);
    }
    return out;
}

double ResidualProfile::max_relative(int from, int to) const {
    double r = 0.0;
    for (int n = std::max(from, 0); n <= to && n < static_cast<int>(absolute.size()); ++n) {
        r = std::max(r, relative(n));
    }
    return r;
}

ResidualProfile jet_residual(const SemiconjugacyJet& jet, const JetMap& f_jet, int N) {
    return jet_residual(jet.pi, jet.g, f_jet, N);
}

ResidualProfile jet_residual(const JetMap& pi, const JetMap& g, const JetMap& f_jet, int N) {
    if (N < 0) {
        throw PreconditionError("jet_residual: negative order");
    }
    const JetMap f = f_jet.with_order(N);
    const JetMap p = pi.with_order(N);
    const JetMap h = g.with_order(N);
    const JetMap lhs = compose_jets(h, p, N);
    const JetMap rhs = compose_jets(p, f, N);
    ResidualProfile out;
    out.absolute.resize(static_cast<std::size_t>(N + 1));
    for (int n = 0; n <= N; ++n) {
        out.absolute[static_cast<std::size_t>(n)] = (lhs[n] - rhs[n]).max_abs();
    }
    out.scale = std::max({1.0, f.max_abs(), p.max_abs(), h.max_abs()});
    return out;
}

}  // namespace foliate
