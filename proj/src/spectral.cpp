#include "foliate/spectral.hpp"

#include "foliate/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#define LAPACK_COMPLEX_CPP
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <tuple>

namespace foliate {

namespace {

void sort_spectrum(Spectrum& s, SpectrumOrder order) {
    auto key = [order](const cplx& z) {
        return order == SpectrumOrder::Modulus ? std::make_tuple(-std::abs(z), -z.real(), -z.imag())
                                               : std::make_tuple(-z.real(), -std::abs(z.imag()), -z.imag());
    };
    std::stable_sort(s.begin(), s.end(), [&](const cplx& a, const cplx& b) { return key(a) < key(b); });
}

// Calls `visit` with every non-decreasing index tuple of length k over [0, size).
void for_each_multiset(int size, int k, const std::function<void(const std::vector<int>&)>& visit) {
    std::vector<int> idx(static_cast<std::size_t>(k), 0);
    if (k == 0) {
        visit(idx);
        return;
    }
    if (size == 0) {
        return;
    }
    while (true) {
        visit(idx);
        int pos = k - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == size - 1) {
            --pos;
        }
        if (pos < 0) {
            return;
        }
        const int v = idx[static_cast<std::size_t>(pos)] + 1;
        for (int p = pos; p < k; ++p) {
            idx[static_cast<std::size_t>(p)] = v;
        }
    }
}

enum class Combine { Product, Sum };

// Tests every combination of (n-j) entries of `first` and j entries of `second` against `targets`.
void scan(ResonanceReport& report, std::vector<ResonanceViolation>& sink, const char* condition, int n, int j,
          const Spectrum& first, const Spectrum& second, const Spectrum& targets, Combine mode, double tol) {
    const cplx unit = mode == Combine::Product ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
    for_each_multiset(static_cast<int>(first.size()), n - j, [&](const std::vector<int>& a) {
        for_each_multiset(static_cast<int>(second.size()), j, [&](const std::vector<int>& b) {
            cplx value = unit;
            Spectrum factors;
            factors.reserve(static_cast<std::size_t>(n));
            for (int i : a) {
                const cplx z = first[static_cast<std::size_t>(i)];
                value = mode == Combine::Product ? value * z : value + z;
                factors.push_back(z);
            }
            for (int i : b) {
                const cplx z = second[static_cast<std::size_t>(i)];
                value = mode == Combine::Product ? value * z : value + z;
                factors.push_back(z);
            }
            for (const cplx& mu : targets) {
                const double gap = resonance_gap(value, mu);
                report.margin = std::min(report.margin, gap);
                if (gap <= tol) {
                    sink.push_back({condition, n, j, factors, value, mu, gap});
                } else if (gap <= kNearResonanceTol) {
                    report.warnings.push_back({condition, n, j, factors, value, mu, gap});
                }
            }
        });
    });
}

double sup_real(const Spectrum& s) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& z : s) {
        m = std::max(m, z.real());
    }
    return m;
}

double inf_real(const Spectrum& s) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& z : s) {
        m = std::min(m, z.real());
    }
    return m;
}

void normalize_column_signs(Eigen::MatrixXd& M) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
        Eigen::Index r = 0;
        M.col(c).cwiseAbs().maxCoeff(&r);
        if (M(r, c) < 0.0) {
            M.col(c) *= -1.0;
        }
    }
}

thread_local const std::vector<cplx>* g_select_targets = nullptr;
thread_local double g_select_tol = 0.0;

bool matches(cplx z, const Spectrum& subset, double tol) {
    return std::any_of(subset.begin(), subset.end(),
                       [&](const cplx& s) { return std::abs(z - s) <= tol * std::max(1.0, std::abs(s)); });
}

lapack_logical select_callback(const double* wr, const double* wi) {
    return matches(cplx(*wr, *wi), *g_select_targets, g_select_tol) ? 1 : 0;
}

}  // namespace

double resonance_gap(cplx value, cplx target) {
    const double scale = std::abs(target);
    return std::abs(value - target) / (scale > 0.0 ? scale : 1.0);
}

double spectral_radius(const Spectrum& s) {
    double r = 0.0;
    for (const auto& z : s) {
        r = std::max(r, std::abs(z));
    }
    return r;
}

SpectrumReport compute_spectrum(const Eigen::MatrixXd& A, SpectrumOrder order) {
    if (A.rows() != A.cols()) {
        throw DimensionError("compute_spectrum: matrix is not square");
    }
    SpectrumReport report;
    if (A.rows() == 0) {
        return report;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, true);
    if (es.info() != Eigen::Success) {
        throw ConvergenceError("compute_spectrum: eigensolver failed");
    }
    const Eigen::VectorXcd ev = es.eigenvalues();
    Spectrum positive, negative, real;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const cplx z = ev[i];
        if (z.imag() > 0.0) {
            positive.push_back(z);
        } else if (z.imag() < 0.0) {
            negative.push_back(z);
        } else {
            real.push_back(z);
        }
    }
    if (positive.size() == negative.size()) {
        report.eigenvalues = real;
        for (const auto& z : positive) {
            report.eigenvalues.push_back(z);
            report.eigenvalues.push_back(std::conj(z));
        }
    } else {
        report.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    }
    sort_spectrum(report.eigenvalues, order);
    report.spectral_radius = spectral_radius(report.eigenvalues);

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
    const auto& sv = svd.singularValues();
    const double smin = sv[sv.size() - 1];
    report.eigvec_condition = smin > 0.0 ? sv[0] / smin : std::numeric_limits<double>::infinity();
    report.diagonalizable = report.eigvec_condition < 1e10;
    return report;
}

EllSelection select_ell(const Spectrum& sigma0, const Spectrum& sigmaA, int r_cap) {
    if (sigma0.empty()) {
        throw PreconditionError("select_ell: empty sigma(A0)");
    }
    double inv_max = 0.0;
    for (const auto& z : sigma0) {
        if (std::abs(z) == 0.0) {
            throw PreconditionError("select_ell: 0 is an eigenvalue of A0");
        }
        inv_max = std::max(inv_max, 1.0 / std::abs(z));
    }
    const double rho = spectral_radius(sigmaA);
    if (rho >= 1.0) {
        throw PreconditionError("select_ell: spectral radius of A is not below 1");
    }
    EllSelection sel;
    auto ratio = [&](int l) { return inv_max * std::pow(rho, l + 1); };
    sel.ell_one_admissible = ratio(1) < 1.0;
    if (rho == 0.0) {
        sel.minimal = 1;
    } else {
        // Smallest l >= 1 with (l+1) log rho < -log inv_max; start from the logarithmic estimate.
        int l = std::max(1, static_cast<int>(std::floor(-std::log(inv_max) / std::log(rho))) - 2);
        while (l > 1 && ratio(l - 1) < 1.0) {
            --l;
        }
        while (ratio(l) >= 1.0) {
            ++l;
        }
        sel.minimal = l;
    }
    sel.ratio_at_minimal = ratio(*sel.minimal);
    if (*sel.minimal < r_cap) {
        sel.largest = r_cap - 1;
    }
    return sel;
}

EllSelection select_ell_generator(const Spectrum& sigmaG0, const Spectrum& sigmaG, int r_cap) {
    if (sigmaG0.empty() || sigmaG.empty()) {
        throw PreconditionError("select_ell_generator: empty spectrum");
    }
    const double sup = sup_real(sigmaG);
    const double inf0 = inf_real(sigmaG0);
    if (sup >= 0.0) {
        throw PreconditionError("select_ell_generator: generator spectrum is not in the left half-plane");
    }
    EllSelection sel;
    sel.ell_one_admissible = 2.0 * sup < inf0;
    // (l+1) sup < inf0  <=>  l + 1 > inf0 / sup.
    int l = std::max(1, static_cast<int>(std::floor(inf0 / sup)));
    while (l > 1 && l * sup < inf0) {
        --l;
    }
    while ((l + 1) * sup >= inf0) {
        ++l;
    }
    sel.minimal = l;
    sel.ratio_at_minimal = (l + 1) * sup / inf0;
    if (l < r_cap) {
        sel.largest = r_cap - 1;
    }
    return sel;
}

void ResonanceReport::absorb(const ResonanceReport& other) {
    h4_violations.insert(h4_violations.end(), other.h4_violations.begin(), other.h4_violations.end());
    h5_violations.insert(h5_violations.end(), other.h5_violations.begin(), other.h5_violations.end());
    warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
    margin = std::min(margin, other.margin);
    growth_ok = growth_ok && other.growth_ok;
    growth_margin = std::min(growth_margin, other.growth_margin);
    if (!ell) {
        ell = other.ell;
    }
}

ResonanceReport check_H4(const Spectrum& sigma0, const Spectrum& sigma1, int ell, double tol_res) {
    ResonanceReport report;
    report.ell = ell;
    for (int n = 2; n <= ell; ++n) {
        for (int j = 1; j <= n; ++j) {
            scan(report, report.h4_violations, "H4", n, j, sigma0, sigma1, sigma0, Combine::Product, tol_res);
        }
    }
    return report;
}

ResonanceReport check_H5(const Spectrum& sigma0, int ell, int m, double tol_res) {
    ResonanceReport report;
    report.ell = ell;
    for (int n = std::max(m, 2); n <= ell; ++n) {
        scan(report, report.h5_violations, "H5", n, 0, sigma0, {}, sigma0, Combine::Product, tol_res);
    }
    return report;
}

ResonanceReport check_generator_conditions(const Spectrum& sigmaG, const Spectrum& sigmaG0, const Spectrum& sigmaG1,
                                           int ell, int m, double tol_res) {
    for (const auto& z : sigmaG) {
        if (z.real() >= 0.0) {
            throw PreconditionError("check_generator_conditions: eigenvalue with nonnegative real part");
        }
    }
    ResonanceReport report;
    report.ell = ell;
    const double lhs = (ell + 1) * sup_real(sigmaG);
    const double rhs = inf_real(sigmaG0);
    report.growth_ok = lhs < rhs;
    report.growth_margin = rhs - lhs;
    for (int n = 2; n <= ell; ++n) {
        for (int j = 1; j <= n; ++j) {
            scan(report, report.h4_violations, "A4", n, j, sigmaG0, sigmaG1, sigmaG0, Combine::Sum, tol_res);
        }
    }
    for (int n = std::max(m, 2); n <= ell; ++n) {
        scan(report, report.h5_violations, "A5", n, 0, sigmaG0, {}, sigmaG0, Combine::Sum, tol_res);
    }
    return report;
}

SpectralProjection spectral_projection(const Eigen::MatrixXd& A, const Spectrum& subset, double gap_tol,
                                       double match_tol) {
    if (A.rows() != A.cols() || A.rows() == 0) {
        throw DimensionError("spectral_projection: matrix must be square and nonempty");
    }
    const auto d = static_cast<lapack_int>(A.rows());
    const auto spec = compute_spectrum(A).eigenvalues;
    Spectrum selected, rest;
    for (const auto& z : spec) {
        (matches(z, subset, match_tol) ? selected : rest).push_back(z);
    }
    if (selected.empty()) {
        throw PreconditionError("spectral_projection: no eigenvalue matches the requested subset");
    }
    for (const auto& z : selected) {
        if (z.imag() != 0.0 && !matches(std::conj(z), selected, 1e-12)) {
            throw PreconditionError("spectral_projection: subset is not closed under complex conjugation");
        }
    }
    SpectralProjection out;
    out.gap = std::numeric_limits<double>::infinity();
    for (const auto& a : selected) {
        for (const auto& b : rest) {
            out.gap = std::min(out.gap, std::abs(a - b));
        }
    }
    if (out.gap < gap_tol) {
        throw PreconditionError("spectral_projection: spectral gap " + std::to_string(out.gap) +
                                " below tolerance");
    }

    Eigen::MatrixXd T = A;
    Eigen::MatrixXd Z(d, d);
    Eigen::VectorXd wr(d), wi(d);
    lapack_int sdim = 0;
    g_select_targets = &subset;
    g_select_tol = match_tol;
    const lapack_int info =
        LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'S', select_callback, d, T.data(), d, &sdim, wr.data(), wi.data(),
                      Z.data(), d);
    g_select_targets = nullptr;
    if (info != 0) {
        throw ConvergenceError("spectral_projection: ordered Schur decomposition failed (info " +
                               std::to_string(info) + ")");
    }
    const auto k = static_cast<Eigen::Index>(sdim);
    if (k != static_cast<Eigen::Index>(selected.size())) {
        throw ConvergenceError("spectral_projection: Schur reordering selected an unexpected number of eigenvalues");
    }
    for (Eigen::Index i = 0; i < k; ++i) {
        out.selected.emplace_back(wr[i], wi[i]);
    }
    out.basis = Z.leftCols(k);
    normalize_column_signs(out.basis);
    if (k == d) {
        out.P = Eigen::MatrixXd::Identity(d, d);
        out.complement = Eigen::MatrixXd(d, 0);
        return out;
    }
    const Eigen::Index m = d - k;
    const Eigen::MatrixXd T11 = T.topLeftCorner(k, k);
    const Eigen::MatrixXd T22 = T.bottomRightCorner(m, m);
    Eigen::MatrixXd Y = -T.topRightCorner(k, m);
    double scale = 1.0;
    const lapack_int sinfo =
        LAPACKE_dtrsyl(LAPACK_COL_MAJOR, 'N', 'N', -1, static_cast<lapack_int>(k), static_cast<lapack_int>(m),
                       T11.data(), static_cast<lapack_int>(k), T22.data(), static_cast<lapack_int>(m), Y.data(),
                       static_cast<lapack_int>(k), &scale);
    if (sinfo < 0) {
        throw ConvergenceError("spectral_projection: Sylvester solve failed");
    }
    Y /= scale;
    // T = [[T11, T12], [0, T22]]; with T11 Y - Y T22 = -T12 the projection is Z [[I, -Y], [0, 0]] Z^T.
    Eigen::MatrixXd core = Eigen::MatrixXd::Zero(d, d);
    core.topLeftCorner(k, k).setIdentity();
    core.topRightCorner(k, m) = -Y;
    out.P = Z * core * Z.transpose();
    Eigen::MatrixXd comp(d, m);
    comp.topRows(k) = Y;
    comp.bottomRows(m).setIdentity();
    comp = Z * comp;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(comp);
    out.complement = qr.householderQ() * Eigen::MatrixXd::Identity(d, m);
    normalize_column_signs(out.complement);
    return out;
}

Eigen::MatrixXd realify_block(cplx lambda) {
    if (lambda.imag() == 0.0) {
        return Eigen::MatrixXd::Constant(1, 1, lambda.real());
    }
    Eigen::MatrixXd M(2, 2);
    M << lambda.real(), -lambda.imag(), lambda.imag(), lambda.real();
    return M;
}

DecayEstimate estimate_decay(const Eigen::MatrixXd& A, int kmax) {
    if (A.rows() != A.cols()) {
        throw DimensionError("estimate_decay: matrix is not square");
    }
    const double rho = compute_spectrum(A).spectral_radius;
    if (rho >= 1.0) {
        throw PreconditionError("estimate_decay: spectral radius " + std::to_string(rho) + " is not below 1");
    }
    kmax = std::max(kmax, 2);
    std::vector<double> norms(static_cast<std::size_t>(kmax + 1));
    Eigen::MatrixXd Ak = Eigen::MatrixXd::Identity(A.rows(), A.cols());
    for (int k = 0; k <= kmax; ++k) {
        norms[static_cast<std::size_t>(k)] = Ak.operatorNorm();
        Ak = A * Ak;
    }
    DecayEstimate est;
    // Fit log ||A^k|| on the second half of the range, where transients have faded.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    bool vanished = false;
    for (int k = kmax / 2; k <= kmax; ++k) {
        const double v = norms[static_cast<std::size_t>(k)];
        if (!(v > 1e-280)) {
            vanished = true;
            break;
        }
        const double y = std::log(v);
        sx += k;
        sy += y;
        sxx += static_cast<double>(k) * k;
        sxy += k * y;
        ++count;
    }
    if (vanished || count < 2) {
        est.rate = rho;
    } else {
        const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
        est.rate = std::clamp(std::exp(slope), rho, std::max(rho, 1.0 - 1e-12));
    }
    est.C = 1.0;
    for (int k = 0; k <= kmax; ++k) {
        const double v = norms[static_cast<std::size_t>(k)];
        if (v == 0.0) {
            continue;
        }
        const double denom = std::pow(est.rate, k);
        if (denom > 0.0) {
            est.C = std::max(est.C, v / denom);
        }
    }
    return est;
}

}  // namespace foliate
