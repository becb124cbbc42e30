#pragma once

// Reference implementations used only by the tests. They deliberately avoid the library's
// enumeration and solver code paths.

#include <complex>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

struct Verdict {
    // (n, j, target index) triples found resonant, for each condition.
    std::set<std::tuple<int, int, int>> mixed;  // H.4 / A.4
    std::set<std::tuple<int, int, int>> pure;   // H.5 / A.5
    double margin = std::numeric_limits<double>::infinity();
    bool growth_ok = true;
};

inline double gap(cplx v, cplx t) {
    const double s = std::abs(t);
    return std::abs(v - t) / (s > 0.0 ? s : 1.0);
}

// All ordered tuples of length k over [0, size), via an odometer. Order is irrelevant to the
// verdict, and duplicates of the same multiset give the same value.
template <class F>
void odometer(int size, int k, F&& visit) {
    std::vector<int> idx(static_cast<std::size_t>(k), 0);
    if (k > 0 && size == 0) {
        return;
    }
    while (true) {
        visit(idx);
        int p = 0;
        while (p < k) {
            if (++idx[static_cast<std::size_t>(p)] < size) {
                break;
            }
            idx[static_cast<std::size_t>(p)] = 0;
            ++p;
        }
        if (p == k) {
            return;
        }
    }
}

template <bool Additive>
void check_mixed(const std::vector<cplx>& s0, const std::vector<cplx>& s1, int n, int j, double tol,
                 std::set<std::tuple<int, int, int>>& hits, double& margin) {
    const int total = n;
    // Flatten into one odometer over the concatenated index space; the first n-j slots use s0.
    odometer(static_cast<int>(std::max(s0.size(), s1.size())), total, [&](const std::vector<int>& idx) {
        cplx v = Additive ? cplx(0.0) : cplx(1.0);
        for (int s = 0; s < total; ++s) {
            const auto& src = s < n - j ? s0 : s1;
            const int i = idx[static_cast<std::size_t>(s)];
            if (i >= static_cast<int>(src.size())) {
                return;
            }
            v = Additive ? v + src[static_cast<std::size_t>(i)] : v * src[static_cast<std::size_t>(i)];
        }
        for (std::size_t t = 0; t < s0.size(); ++t) {
            const double g = gap(v, s0[t]);
            margin = std::min(margin, g);
            if (g <= tol) {
                hits.emplace(n, j, static_cast<int>(t));
            }
        }
    });
}

inline Verdict map_conditions(const std::vector<cplx>& s0, const std::vector<cplx>& s1, int ell, double tol) {
    Verdict v;
    for (int n = 2; n <= ell; ++n) {
        for (int j = 1; j <= n; ++j) {
            check_mixed<false>(s0, s1, n, j, tol, v.mixed, v.margin);
        }
        check_mixed<false>(s0, s1, n, 0, tol, v.pure, v.margin);
    }
    return v;
}

inline Verdict generator_conditions(const std::vector<cplx>& g, const std::vector<cplx>& s0,
                                    const std::vector<cplx>& s1, int ell, double tol) {
    Verdict v;
    double sup = -std::numeric_limits<double>::infinity();
    for (auto z : g) {
        sup = std::max(sup, z.real());
    }
    double inf0 = std::numeric_limits<double>::infinity();
    for (auto z : s0) {
        inf0 = std::min(inf0, z.real());
    }
    v.growth_ok = (ell + 1) * sup < inf0;
    for (int n = 2; n <= ell; ++n) {
        for (int j = 1; j <= n; ++j) {
            check_mixed<true>(s0, s1, n, j, tol, v.mixed, v.margin);
        }
        check_mixed<true>(s0, s1, n, 0, tol, v.pure, v.margin);
    }
    return v;
}

}  // namespace oracle
