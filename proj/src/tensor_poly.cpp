#include "foliate/tensor_poly.hpp"

#include "foliate/errors.hpp"

#include <algorithm>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>
#include <tuple>
#include <unordered_map>

namespace foliate {

namespace {

std::string dims(int a, int b) { return std::to_string(a) + " vs " + std::to_string(b); }

std::uint64_t pack_key(int a, int b, int c) {
    return (static_cast<std::uint64_t>(a) << 40) | (static_cast<std::uint64_t>(b) << 20) |
           static_cast<std::uint64_t>(c);
}

}  // namespace

std::size_t monomial_count(int dim, int degree) {
    if (dim < 0 || degree < 0) {
        throw PreconditionError("monomial_count: negative argument");
    }
    if (dim == 0) {
        return degree == 0 ? 1 : 0;
    }
    // C(dim + degree - 1, degree) computed incrementally; exact for the sizes used here.
    std::size_t result = 1;
    for (int i = 1; i <= degree; ++i) {
        result = result * static_cast<std::size_t>(dim - 1 + i) / static_cast<std::size_t>(i);
    }
    return result;
}

MonomialTable::MonomialTable(int dim, int degree) : dim_(dim), degree_(degree) {
    if (dim < 1 || degree < 0) {
        throw PreconditionError("MonomialTable: need dim >= 1 and degree >= 0");
    }
    exponents_.reserve(monomial_count(dim, degree));
    Exponent e(static_cast<std::size_t>(dim), 0);
    // Lexicographically descending enumeration of compositions of `degree`.
    auto rec = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == dim - 1) {
            e[static_cast<std::size_t>(pos)] = remaining;
            exponents_.push_back(e);
            return;
        }
        for (int v = remaining; v >= 0; --v) {
            e[static_cast<std::size_t>(pos)] = v;
            self(self, pos + 1, remaining - v);
        }
    };
    rec(rec, 0, degree);

    parent_.assign(exponents_.size(), 0);
    var_.assign(exponents_.size(), -1);
    if (degree >= 1) {
        const auto& lower = MonomialTable::get(dim, degree - 1);
        for (std::size_t k = 0; k < exponents_.size(); ++k) {
            Exponent p = exponents_[k];
            int v = dim - 1;
            while (p[static_cast<std::size_t>(v)] == 0) {
                --v;
            }
            p[static_cast<std::size_t>(v)] -= 1;
            parent_[k] = lower.index_of(p);
            var_[k] = v;
        }
    }
}

const MonomialTable& MonomialTable::get(int dim, int degree) {
    static std::mutex mutex;
    static std::unordered_map<std::uint64_t, std::unique_ptr<MonomialTable>> cache;
    const auto key = pack_key(dim, degree, 0);
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) {
            return *it->second;
        }
    }
    // Built outside the lock: construction recursively requests the degree-1 table.
    auto table = std::make_unique<MonomialTable>(dim, degree);
    std::lock_guard lock(mutex);
    auto [it, inserted] = cache.emplace(key, std::move(table));
    return *it->second;
}

std::size_t MonomialTable::index_of(std::span<const int> e) const {
    if (static_cast<int>(e.size()) != dim_) {
        throw DimensionError("MonomialTable::index_of: exponent length " + dims(static_cast<int>(e.size()), dim_));
    }
    std::size_t rank = 0;
    int remaining = degree_;
    for (int i = 0; i < dim_ - 1; ++i) {
        const int ei = e[static_cast<std::size_t>(i)];
        if (ei < 0 || ei > remaining) {
            throw PreconditionError("MonomialTable::index_of: exponent does not have the table degree");
        }
        if (ei < remaining) {
            rank += monomial_count(dim_ - i, remaining - ei - 1);
        }
        remaining -= ei;
    }
    if (e[static_cast<std::size_t>(dim_ - 1)] != remaining) {
        throw PreconditionError("MonomialTable::index_of: exponent does not have the table degree");
    }
    return rank;
}

const std::vector<std::uint32_t>& product_table(int dim, int deg_a, int deg_b) {
    static std::mutex mutex;
    static std::unordered_map<std::uint64_t, std::unique_ptr<std::vector<std::uint32_t>>> cache;
    const auto key = pack_key(dim, deg_a, deg_b);
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) {
            return *it->second;
        }
    }
    const auto& ta = MonomialTable::get(dim, deg_a);
    const auto& tb = MonomialTable::get(dim, deg_b);
    const auto& tc = MonomialTable::get(dim, deg_a + deg_b);
    auto table = std::make_unique<std::vector<std::uint32_t>>(ta.size() * tb.size());
    Exponent sum(static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < ta.size(); ++i) {
        for (std::size_t j = 0; j < tb.size(); ++j) {
            for (std::size_t v = 0; v < sum.size(); ++v) {
                sum[v] = ta.exponent(i)[v] + tb.exponent(j)[v];
            }
            (*table)[i * tb.size() + j] = static_cast<std::uint32_t>(tc.index_of(sum));
        }
    }
    std::lock_guard lock(mutex);
    auto [it, inserted] = cache.emplace(key, std::move(table));
    return *it->second;
}

// ---------------------------------------------------------------------------
// HomogeneousPoly

HomogeneousPoly::HomogeneousPoly(int degree, int in_dim, int out_dim)
    : degree_(degree), in_dim_(in_dim),
      coeffs_(Eigen::MatrixXd::Zero(out_dim, static_cast<Eigen::Index>(monomial_count(in_dim, degree)))) {
    if (in_dim < 1 || out_dim < 1 || degree < 0) {
        throw DimensionError("HomogeneousPoly: dimensions must be positive");
    }
}

HomogeneousPoly::HomogeneousPoly(int degree, int in_dim, Eigen::MatrixXd coeffs)
    : degree_(degree), in_dim_(in_dim), coeffs_(std::move(coeffs)) {
    if (in_dim < 1 || degree < 0 || coeffs_.rows() < 1) {
        throw DimensionError("HomogeneousPoly: dimensions must be positive");
    }
    if (static_cast<std::size_t>(coeffs_.cols()) != monomial_count(in_dim, degree)) {
        throw DimensionError("HomogeneousPoly: coefficient matrix has " + std::to_string(coeffs_.cols()) +
                             " columns, expected " + std::to_string(monomial_count(in_dim, degree)));
    }
}

Eigen::VectorXd HomogeneousPoly::coeff(std::span<const int> e) const {
    return coeffs_.col(static_cast<Eigen::Index>(monomials().index_of(e)));
}

void HomogeneousPoly::set_coeff(std::span<const int> e, const Eigen::VectorXd& value) {
    if (value.size() != coeffs_.rows()) {
        throw DimensionError("HomogeneousPoly::set_coeff: value length " +
                             dims(static_cast<int>(value.size()), out_dim()));
    }
    coeffs_.col(static_cast<Eigen::Index>(monomials().index_of(e))) = value;
}

namespace {

// Values of every monomial of each degree 0..order at x.
std::vector<Eigen::VectorXd> monomial_values(const Eigen::VectorXd& x, int order) {
    const int d = static_cast<int>(x.size());
    std::vector<Eigen::VectorXd> vals(static_cast<std::size_t>(order + 1));
    vals[0] = Eigen::VectorXd::Ones(1);
    for (int n = 1; n <= order; ++n) {
        const auto& t = MonomialTable::get(d, n);
        Eigen::VectorXd v(static_cast<Eigen::Index>(t.size()));
        const auto& prev = vals[static_cast<std::size_t>(n - 1)];
        for (std::size_t k = 0; k < t.size(); ++k) {
            v[static_cast<Eigen::Index>(k)] = prev[static_cast<Eigen::Index>(t.parent(k))] * x[t.divisor_var(k)];
        }
        vals[static_cast<std::size_t>(n)] = std::move(v);
    }
    return vals;
}

}  // namespace

Eigen::VectorXd HomogeneousPoly::operator()(const Eigen::VectorXd& x) const {
    if (x.size() != in_dim_) {
        throw DimensionError("HomogeneousPoly: point of dimension " + dims(static_cast<int>(x.size()), in_dim_));
    }
    const auto vals = monomial_values(x, degree_);
    return coeffs_ * vals[static_cast<std::size_t>(degree_)];
}

HomogeneousPoly& HomogeneousPoly::operator+=(const HomogeneousPoly& other) {
    if (other.degree_ != degree_ || other.in_dim_ != in_dim_ || other.out_dim() != out_dim()) {
        throw DimensionError("HomogeneousPoly: incompatible operands");
    }
    coeffs_ += other.coeffs_;
    return *this;
}

HomogeneousPoly& HomogeneousPoly::operator-=(const HomogeneousPoly& other) {
    if (other.degree_ != degree_ || other.in_dim_ != in_dim_ || other.out_dim() != out_dim()) {
        throw DimensionError("HomogeneousPoly: incompatible operands");
    }
    coeffs_ -= other.coeffs_;
    return *this;
}

HomogeneousPoly operator+(HomogeneousPoly a, const HomogeneousPoly& b) { return a += b; }
HomogeneousPoly operator-(HomogeneousPoly a, const HomogeneousPoly& b) { return a -= b; }
HomogeneousPoly operator*(double s, HomogeneousPoly p) { return p *= s; }

// ---------------------------------------------------------------------------
// JetMap

JetMap::JetMap(int in_dim, int out_dim, int order) : in_dim_(in_dim), out_dim_(out_dim) {
    if (order < 0) {
        throw PreconditionError("JetMap: negative order");
    }
    components_.reserve(static_cast<std::size_t>(order + 1));
    for (int n = 0; n <= order; ++n) {
        components_.emplace_back(n, in_dim, out_dim);
    }
}

JetMap::JetMap(std::vector<HomogeneousPoly> components) : components_(std::move(components)) {
    if (components_.empty()) {
        throw PreconditionError("JetMap: at least the degree-0 component is required");
    }
    in_dim_ = components_.front().in_dim();
    out_dim_ = components_.front().out_dim();
    for (std::size_t n = 0; n < components_.size(); ++n) {
        const auto& c = components_[n];
        if (c.degree() != static_cast<int>(n)) {
            throw PreconditionError("JetMap: component degrees must be contiguous from 0");
        }
        if (c.in_dim() != in_dim_ || c.out_dim() != out_dim_) {
            throw DimensionError("JetMap: inconsistent component dimensions");
        }
    }
}

JetMap JetMap::identity(int dim, int order) {
    return linear(Eigen::MatrixXd::Identity(dim, dim), order);
}

JetMap JetMap::linear(const Eigen::MatrixXd& L, int order) {
    JetMap j(static_cast<int>(L.cols()), static_cast<int>(L.rows()), std::max(order, 1));
    // Degree-1 monomial x_i sits at column i of the graded-lex table.
    j[1].coeffs() = L;
    return order >= 1 ? j : j.with_order(order);
}

Eigen::MatrixXd JetMap::linear_part() const {
    if (order() < 1) {
        return Eigen::MatrixXd::Zero(out_dim_, in_dim_);
    }
    return components_[1].coeffs();
}

JetMap JetMap::with_order(int new_order) const {
    JetMap out(in_dim_, out_dim_, new_order);
    for (int n = 0; n <= std::min(new_order, order()); ++n) {
        out[n] = components_[static_cast<std::size_t>(n)];
    }
    return out;
}

Eigen::VectorXd JetMap::pack() const {
    Eigen::Index total = 0;
    for (int n = 1; n <= order(); ++n) {
        total += components_[static_cast<std::size_t>(n)].coeffs().size();
    }
    Eigen::VectorXd v(total);
    Eigen::Index pos = 0;
    for (int n = 1; n <= order(); ++n) {
        const auto& c = components_[static_cast<std::size_t>(n)].coeffs();
        v.segment(pos, c.size()) = Eigen::Map<const Eigen::VectorXd>(c.data(), c.size());
        pos += c.size();
    }
    return v;
}

JetMap JetMap::unpack(const Eigen::VectorXd& v, int in_dim, int out_dim, int order) {
    JetMap j(in_dim, out_dim, order);
    Eigen::Index pos = 0;
    for (int n = 1; n <= order; ++n) {
        auto& c = j[n].coeffs();
        if (pos + c.size() > v.size()) {
            throw DimensionError("JetMap::unpack: vector too short");
        }
        Eigen::Map<Eigen::VectorXd>(c.data(), c.size()) = v.segment(pos, c.size());
        pos += c.size();
    }
    if (pos != v.size()) {
        throw DimensionError("JetMap::unpack: vector too long");
    }
    return j;
}

double JetMap::max_abs() const {
    double m = 0.0;
    for (const auto& c : components_) {
        m = std::max(m, c.max_abs());
    }
    return m;
}

JetMap& JetMap::operator+=(const JetMap& other) {
    if (other.in_dim_ != in_dim_ || other.out_dim_ != out_dim_) {
        throw DimensionError("JetMap: incompatible operands");
    }
    if (other.order() > order()) {
        *this = with_order(other.order());
    }
    for (int n = 0; n <= other.order(); ++n) {
        components_[static_cast<std::size_t>(n)] += other[n];
    }
    return *this;
}

JetMap& JetMap::operator-=(const JetMap& other) {
    JetMap neg = other;
    neg *= -1.0;
    return *this += neg;
}

JetMap& JetMap::operator*=(double s) {
    for (auto& c : components_) {
        c *= s;
    }
    return *this;
}

JetMap operator+(JetMap a, const JetMap& b) { return a += b; }
JetMap operator-(JetMap a, const JetMap& b) { return a -= b; }
JetMap operator*(double s, JetMap j) { return j *= s; }

Eigen::VectorXd eval_jet(const JetMap& j, const Eigen::VectorXd& x) {
    if (x.size() != j.in_dim()) {
        throw DimensionError("eval_jet: point of dimension " + dims(static_cast<int>(x.size()), j.in_dim()));
    }
    const auto vals = monomial_values(x, j.order());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(j.out_dim());
    for (int n = 0; n <= j.order(); ++n) {
        out += j[n].coeffs() * vals[static_cast<std::size_t>(n)];
    }
    return out;
}

Eigen::MatrixXd jet_jacobian(const JetMap& j, const Eigen::VectorXd& x) {
    const int d = j.in_dim();
    if (x.size() != d) {
        throw DimensionError("jet_jacobian: point of dimension " + dims(static_cast<int>(x.size()), d));
    }
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(j.out_dim(), d);
    if (j.order() < 1) {
        return J;
    }
    const auto vals = monomial_values(x, j.order() - 1);
    for (int n = 1; n <= j.order(); ++n) {
        const auto& coeffs = j[n].coeffs();
        const auto& table = MonomialTable::get(d, n);
        const auto& prod = product_table(d, n - 1, 1);
        const auto& lower = vals[static_cast<std::size_t>(n - 1)];
        // x^{a + e_i} differentiated in x_i contributes (a_i + 1) x^a.
        for (Eigen::Index a = 0; a < lower.size(); ++a) {
            const double xa = lower[a];
            if (xa == 0.0) {
                continue;
            }
            for (int i = 0; i < d; ++i) {
                const std::size_t c = prod[static_cast<std::size_t>(a) * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)];
                const double mult = table.exponent(c)[static_cast<std::size_t>(i)];
                J.col(i) += (mult * xa) * coeffs.col(static_cast<Eigen::Index>(c));
            }
        }
    }
    return J;
}

// ---------------------------------------------------------------------------
// Composition

namespace {

// Scalar truncated power series in `dim` variables; empty blocks are zero.
struct Series {
    std::vector<Eigen::VectorXd> blk;
};

bool block_nonzero(const Eigen::VectorXd& b) { return b.size() > 0 && b.cwiseAbs().maxCoeff() != 0.0; }

Series multiply(const Series& a, const Series& b, int dim, int order) {
    Series r;
    r.blk.resize(static_cast<std::size_t>(order + 1));
    for (int da = 0; da <= order; ++da) {
        const auto& A = a.blk[static_cast<std::size_t>(da)];
        if (A.size() == 0) {
            continue;
        }
        for (int db = 0; da + db <= order; ++db) {
            const auto& B = b.blk[static_cast<std::size_t>(db)];
            if (B.size() == 0) {
                continue;
            }
            auto& R = r.blk[static_cast<std::size_t>(da + db)];
            if (R.size() == 0) {
                R = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(monomial_count(dim, da + db)));
            }
            const auto& table = product_table(dim, da, db);
            const auto nb = static_cast<std::size_t>(B.size());
            for (Eigen::Index ia = 0; ia < A.size(); ++ia) {
                const double av = A[ia];
                if (av == 0.0) {
                    continue;
                }
                const std::uint32_t* row = table.data() + static_cast<std::size_t>(ia) * nb;
                for (std::size_t ib = 0; ib < nb; ++ib) {
                    R[row[ib]] += av * B[static_cast<Eigen::Index>(ib)];
                }
            }
        }
    }
    return r;
}

struct ComposeContext {
    const JetMap& outer;
    const std::vector<Series>& inner;
    int in_dim;
    int mid_dim;
    int order;
    int max_outer_degree;
    JetMap& result;
};

void accumulate(ComposeContext& ctx, const Series& s, const Eigen::VectorXd& coeff) {
    for (int n = 0; n <= ctx.order; ++n) {
        const auto& b = s.blk[static_cast<std::size_t>(n)];
        if (b.size() == 0) {
            continue;
        }
        ctx.result[n].coeffs().noalias() += coeff * b.transpose();
    }
}

// Depth-first walk over outer monomials: y^e is built from y^parent(e) * y_v, keeping only
// the current path alive.
void visit(ComposeContext& ctx, const Series& current, Exponent& e, int degree, int last_var) {
    const int next_degree = degree + 1;
    const auto& table = MonomialTable::get(ctx.mid_dim, next_degree);
    const auto& outer_c = ctx.outer[next_degree].coeffs();
    for (int w = last_var; w < ctx.mid_dim; ++w) {
        e[static_cast<std::size_t>(w)] += 1;
        const auto idx = static_cast<Eigen::Index>(table.index_of(e));
        const bool leaf = next_degree == ctx.max_outer_degree;
        const auto col = outer_c.col(idx);
        const bool has_coeff = col.cwiseAbs().maxCoeff() != 0.0;
        if (has_coeff || !leaf) {
            Series child = degree == 0 ? ctx.inner[static_cast<std::size_t>(w)]
                                       : multiply(current, ctx.inner[static_cast<std::size_t>(w)], ctx.in_dim, ctx.order);
            if (has_coeff) {
                accumulate(ctx, child, col);
            }
            if (!leaf) {
                visit(ctx, child, e, next_degree, w);
            }
        }
        e[static_cast<std::size_t>(w)] -= 1;
    }
}

}  // namespace

JetMap compose_jets(const JetMap& outer, const JetMap& inner, int order) {
    if (outer.in_dim() != inner.out_dim()) {
        throw DimensionError("compose_jets: outer input " + dims(outer.in_dim(), inner.out_dim()) +
                             " inner output");
    }
    if (order < 0) {
        throw PreconditionError("compose_jets: negative order");
    }
    if (!inner[0].is_zero()) {
        throw PreconditionError("compose_jets: inner jet has a nonzero constant term");
    }
    const int in_dim = inner.in_dim();
    const int mid_dim = inner.out_dim();
    JetMap result(in_dim, outer.out_dim(), order);
    result[0] = HomogeneousPoly(0, in_dim, outer[0].coeffs());

    std::vector<Series> inner_series(static_cast<std::size_t>(mid_dim));
    for (int i = 0; i < mid_dim; ++i) {
        auto& s = inner_series[static_cast<std::size_t>(i)];
        s.blk.resize(static_cast<std::size_t>(order + 1));
        for (int n = 1; n <= std::min(order, inner.order()); ++n) {
            Eigen::VectorXd row = inner[n].coeffs().row(i).transpose();
            if (block_nonzero(row)) {
                s.blk[static_cast<std::size_t>(n)] = std::move(row);
            }
        }
    }
    const int max_outer = std::min(outer.order(), order);
    if (max_outer >= 1) {
        ComposeContext ctx{outer, inner_series, in_dim, mid_dim, order, max_outer, result};
        Series one;
        one.blk.resize(static_cast<std::size_t>(order + 1));
        one.blk[0] = Eigen::VectorXd::Ones(1);
        Exponent e(static_cast<std::size_t>(mid_dim), 0);
        visit(ctx, one, e, 0, 0);
    }
    return result;
}

JetMap left_multiply(const Eigen::MatrixXd& L, const JetMap& j) {
    if (L.cols() != j.out_dim()) {
        throw DimensionError("left_multiply: matrix columns " + dims(static_cast<int>(L.cols()), j.out_dim()));
    }
    std::vector<HomogeneousPoly> comps;
    comps.reserve(static_cast<std::size_t>(j.order() + 1));
    for (int n = 0; n <= j.order(); ++n) {
        comps.emplace_back(n, j.in_dim(), Eigen::MatrixXd(L * j[n].coeffs()));
    }
    return JetMap(std::move(comps));
}

JetMap invert_jet(const JetMap& j, int order) {
    if (j.in_dim() != j.out_dim()) {
        throw DimensionError("invert_jet: map is not square");
    }
    if (!j[0].is_zero()) {
        throw PreconditionError("invert_jet: jet has a nonzero constant term");
    }
    const Eigen::MatrixXd L = j.linear_part();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(L);
    if (!lu.isInvertible()) {
        throw PreconditionError("invert_jet: linear part is singular");
    }
    const Eigen::MatrixXd Linv = lu.inverse();
    JetMap nonlinear = j.with_order(order);
    nonlinear[1].coeffs().setZero();
    JetMap h = JetMap::linear(Linv, order);
    for (int n = 2; n <= order; ++n) {
        // j o h = id at degree n: L h_n + [j_{>=2} o h_{<n}]_n = 0.
        const JetMap partial = compose_jets(nonlinear, h.with_order(n - 1), n);
        h[n].coeffs() = -Linv * partial[n].coeffs();
    }
    return h;
}

// ---------------------------------------------------------------------------
// Splitting

Splitting Splitting::coordinate(int dim, std::vector<int> x0_indices) {
    if (dim < 1) {
        throw DimensionError("Splitting: dimension must be positive");
    }
    std::sort(x0_indices.begin(), x0_indices.end());
    if (std::adjacent_find(x0_indices.begin(), x0_indices.end()) != x0_indices.end()) {
        throw PreconditionError("Splitting: repeated X0 coordinate");
    }
    for (int i : x0_indices) {
        if (i < 0 || i >= dim) {
            throw DimensionError("Splitting: X0 coordinate index out of range");
        }
    }
    Splitting s;
    s.adapted_ = true;
    s.basis0_ = x0_indices;
    s.x1_mask_.assign(static_cast<std::size_t>(dim), true);
    for (int i : x0_indices) {
        s.x1_mask_[static_cast<std::size_t>(i)] = false;
    }
    for (int i = 0; i < dim; ++i) {
        if (s.x1_mask_[static_cast<std::size_t>(i)]) {
            s.basis1_.push_back(i);
        }
    }
    const auto d0 = static_cast<Eigen::Index>(s.basis0_.size());
    const auto d1 = static_cast<Eigen::Index>(s.basis1_.size());
    s.iota0_ = Eigen::MatrixXd::Zero(dim, d0);
    s.iota1_ = Eigen::MatrixXd::Zero(dim, d1);
    for (Eigen::Index k = 0; k < d0; ++k) {
        s.iota0_(s.basis0_[static_cast<std::size_t>(k)], k) = 1.0;
    }
    for (Eigen::Index k = 0; k < d1; ++k) {
        s.iota1_(s.basis1_[static_cast<std::size_t>(k)], k) = 1.0;
    }
    s.P0t_ = s.iota0_.transpose();
    s.P1t_ = s.iota1_.transpose();
    s.finish();
    return s;
}

Splitting Splitting::from_basis(const Eigen::MatrixXd& basis, int dim0) {
    const auto d = basis.rows();
    if (basis.cols() != d || d < 1) {
        throw DimensionError("Splitting::from_basis: basis must be square");
    }
    if (dim0 < 0 || dim0 > d) {
        throw DimensionError("Splitting::from_basis: dim0 out of range");
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
    if (!lu.isInvertible()) {
        throw PreconditionError("Splitting::from_basis: basis is singular");
    }
    // Recognize coordinate-aligned bases so block splitting stays available.
    std::vector<int> axis(static_cast<std::size_t>(d), -1);
    bool aligned = true;
    for (Eigen::Index c = 0; c < d && aligned; ++c) {
        int hit = -1;
        for (Eigen::Index r = 0; r < d; ++r) {
            if (basis(r, c) == 1.0 && hit < 0) {
                hit = static_cast<int>(r);
            } else if (basis(r, c) != 0.0) {
                aligned = false;
            }
        }
        aligned = aligned && hit >= 0;
        axis[static_cast<std::size_t>(c)] = hit;
    }
    if (aligned) {
        std::vector<int> x0(axis.begin(), axis.begin() + dim0);
        std::vector<int> x1(axis.begin() + dim0, axis.end());
        if (std::is_sorted(x0.begin(), x0.end()) && std::is_sorted(x1.begin(), x1.end())) {
            return coordinate(static_cast<int>(d), x0);
        }
    }
    Splitting s;
    s.adapted_ = false;
    s.iota0_ = basis.leftCols(dim0);
    s.iota1_ = basis.rightCols(d - dim0);
    const Eigen::MatrixXd inv = lu.inverse();
    s.P0t_ = inv.topRows(dim0);
    s.P1t_ = inv.bottomRows(d - dim0);
    s.finish();
    return s;
}

void Splitting::finish() {
    P0_ = iota0_ * P0t_;
    P1_ = iota1_ * P1t_;
}

Eigen::MatrixXd Splitting::basis() const {
    Eigen::MatrixXd T(dim(), dim());
    T << iota0_, iota1_;
    return T;
}

// ---------------------------------------------------------------------------
// Block splitting

BlockIndex BlockIndex::canonical(int degree, int weight) {
    if (weight < 0 || weight > degree) {
        throw PreconditionError("BlockIndex: weight outside 0..degree");
    }
    BlockIndex b;
    b.alpha.assign(static_cast<std::size_t>(degree), false);
    for (int i = degree - weight; i < degree; ++i) {
        b.alpha[static_cast<std::size_t>(i)] = true;
    }
    return b;
}

int BlockIndex::weight() const noexcept {
    return static_cast<int>(std::count(alpha.begin(), alpha.end(), true));
}

int monomial_weight(std::span<const int> e, const std::vector<bool>& x1_mask) {
    int w = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (x1_mask[i]) {
            w += e[i];
        }
    }
    return w;
}

BlockMap split_blocks(const HomogeneousPoly& p, const Splitting& s) {
    if (!s.coordinate_adapted()) {
        throw PreconditionError("split_blocks: splitting is not coordinate-adapted");
    }
    if (p.in_dim() != s.dim()) {
        throw DimensionError("split_blocks: polynomial input " + dims(p.in_dim(), s.dim()) + " splitting");
    }
    BlockMap blocks;
    for (int w = 0; w <= p.degree(); ++w) {
        blocks.emplace(BlockIndex::canonical(p.degree(), w), HomogeneousPoly(p.degree(), p.in_dim(), p.out_dim()));
    }
    const auto& table = p.monomials();
    for (std::size_t k = 0; k < table.size(); ++k) {
        const int w = monomial_weight(table.exponent(k), s.x1_mask());
        blocks.at(BlockIndex::canonical(p.degree(), w)).coeffs().col(static_cast<Eigen::Index>(k)) =
            p.coeffs().col(static_cast<Eigen::Index>(k));
    }
    return blocks;
}

HomogeneousPoly merge_blocks(const BlockMap& blocks, const Splitting& s) {
    if (blocks.empty()) {
        throw PreconditionError("merge_blocks: no blocks");
    }
    if (!s.coordinate_adapted()) {
        throw PreconditionError("merge_blocks: splitting is not coordinate-adapted");
    }
    const auto& first = blocks.begin()->second;
    HomogeneousPoly out(first.degree(), first.in_dim(), first.out_dim());
    if (out.in_dim() != s.dim()) {
        throw DimensionError("merge_blocks: block input " + dims(out.in_dim(), s.dim()) + " splitting");
    }
    const auto& table = out.monomials();
    for (const auto& [index, block] : blocks) {
        if (block.degree() != out.degree() || index.degree() != out.degree()) {
            throw PreconditionError("merge_blocks: inconsistent degrees");
        }
        if (block.in_dim() != out.in_dim() || block.out_dim() != out.out_dim()) {
            throw DimensionError("merge_blocks: inconsistent block dimensions");
        }
        const int w = index.weight();
        for (std::size_t k = 0; k < table.size(); ++k) {
            const auto col = block.coeffs().col(static_cast<Eigen::Index>(k));
            if (monomial_weight(table.exponent(k), s.x1_mask()) != w) {
                if (col.cwiseAbs().maxCoeff() != 0.0) {
                    throw PreconditionError("merge_blocks: block holds monomials outside its weight class");
                }
                continue;
            }
            out.coeffs().col(static_cast<Eigen::Index>(k)) += col;
        }
    }
    return out;
}

}  // namespace foliate
