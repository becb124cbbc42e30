#include "foliate/io.hpp"

#include "foliate/errors.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace foliate {

namespace {

const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw ConfigError(std::string("missing field \"") + key + "\"");
    }
    return j.at(key);
}

int int_field(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_number_integer()) {
        throw ConfigError(std::string("field \"") + key + "\" must be an integer");
    }
    return v.get<int>();
}

json record_to_json(const OrderSolveRecord& r) {
    json classes = json::array();
    for (const auto& c : r.classes) {
        classes.push_back({{"weight", c.weight},
                           {"unknowns", c.unknowns},
                           {"min_divisor", number_to_json(c.min_divisor)},
                           {"relative_gap", number_to_json(c.relative_gap)},
                           {"condition", number_to_json(c.condition)},
                           {"solved", c.solved},
                           {"sparse", c.sparse}});
    }
    return {{"degree", r.degree},
            {"mode", to_string(r.mode)},
            {"g_frozen", r.g_frozen},
            {"residual", number_to_json(r.residual)},
            {"scale", number_to_json(r.scale)},
            {"classes", classes},
            {"warnings", r.warnings}};
}

OrderSolveRecord record_from_json(const json& j) {
    OrderSolveRecord r;
    r.degree = int_field(j, "degree");
    r.mode = parse_gmode(field(j, "mode").get<std::string>());
    r.g_frozen = field(j, "g_frozen").get<bool>();
    r.residual = number_from_json(field(j, "residual"));
    r.scale = number_from_json(field(j, "scale"));
    for (const auto& c : field(j, "classes")) {
        ClassRecord cr;
        cr.weight = int_field(c, "weight");
        cr.unknowns = int_field(c, "unknowns");
        cr.min_divisor = number_from_json(field(c, "min_divisor"));
        cr.relative_gap = number_from_json(field(c, "relative_gap"));
        cr.condition = number_from_json(field(c, "condition"));
        cr.solved = field(c, "solved").get<bool>();
        cr.sparse = field(c, "sparse").get<bool>();
        r.classes.push_back(cr);
    }
    r.warnings = field(j, "warnings").get<std::vector<std::string>>();
    return r;
}

json violation_to_json(const ResonanceViolation& v) {
    return {{"condition", v.condition},     {"n", v.n},
            {"j", v.j},                     {"factors", spectrum_to_json(v.factors)},
            {"value", complex_to_json(v.value)}, {"target", complex_to_json(v.target)},
            {"gap", number_to_json(v.gap)}};
}

}  // namespace

json number_to_json(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return v;
}

double number_from_json(const json& j) {
    if (j.is_number()) {
        return j.get<double>();
    }
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        if (s == "-inf") {
            return -std::numeric_limits<double>::infinity();
        }
        if (s == "nan") {
            return std::numeric_limits<double>::quiet_NaN();
        }
    }
    throw ConfigError("expected a number, got " + j.dump());
}

json complex_to_json(cplx z) { return json::array({number_to_json(z.real()), number_to_json(z.imag())}); }

cplx complex_from_json(const json& j) {
    if (j.is_number()) {
        return {j.get<double>(), 0.0};
    }
    if (!j.is_array() || j.size() != 2) {
        throw ConfigError("complex numbers are [re, im] pairs, got " + j.dump());
    }
    return {number_from_json(j[0]), number_from_json(j[1])};
}

json spectrum_to_json(const Spectrum& s) {
    json a = json::array();
    for (const auto& z : s) {
        a.push_back(complex_to_json(z));
    }
    return a;
}

Spectrum spectrum_from_json(const json& j) {
    Spectrum s;
    for (const auto& z : j) {
        s.push_back(complex_from_json(z));
    }
    return s;
}

json matrix_to_json(const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < M.cols(); ++k) {
            row.push_back(number_to_json(M(i, k)));
        }
        rows.push_back(row);
    }
    return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", rows}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const int r = int_field(j, "rows");
    const int c = int_field(j, "cols");
    const json& data = field(j, "data");
    if (r < 0 || c < 0 || static_cast<int>(data.size()) != r) {
        throw ConfigError("matrix: row count does not match");
    }
    Eigen::MatrixXd M(r, c);
    for (int i = 0; i < r; ++i) {
        if (static_cast<int>(data[static_cast<std::size_t>(i)].size()) != c) {
            throw ConfigError("matrix: column count does not match");
        }
        for (int k = 0; k < c; ++k) {
            M(i, k) = number_from_json(data[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
        }
    }
    return M;
}

json jet_to_json(const JetMap& jet) {
    json comps = json::array();
    for (int n = 0; n <= jet.order(); ++n) {
        const auto& p = jet[n];
        const auto& table = MonomialTable::get(jet.in_dim(), n);
        json monos = json::array();
        for (std::size_t k = 0; k < table.size(); ++k) {
            const auto col = p.coeffs().col(static_cast<Eigen::Index>(k));
            if (col.cwiseAbs().maxCoeff() == 0.0) {
                continue;
            }
            json coeffs = json::array();
            for (Eigen::Index i = 0; i < col.size(); ++i) {
                coeffs.push_back(number_to_json(col[i]));
            }
            monos.push_back({{"exponents", table.exponent(k)}, {"coeffs", coeffs}});
        }
        comps.push_back({{"degree", n}, {"monomials", monos}});
    }
    return {{"in_dim", jet.in_dim()}, {"out_dim", jet.out_dim()}, {"N", jet.order()}, {"components", comps}};
}

JetMap jet_from_json(const json& j) {
    const int in_dim = int_field(j, "in_dim");
    const int out_dim = int_field(j, "out_dim");
    const int N = int_field(j, "N");
    if (in_dim < 1 || out_dim < 1 || N < 0) {
        throw ConfigError("jet: dimensions must be positive and N nonnegative");
    }
    JetMap jet(in_dim, out_dim, N);
    for (const auto& comp : field(j, "components")) {
        const int n = int_field(comp, "degree");
        if (n < 0 || n > N) {
            throw ConfigError("jet: component degree " + std::to_string(n) + " outside 0.." + std::to_string(N));
        }
        for (const auto& m : field(comp, "monomials")) {
            const auto e = field(m, "exponents").get<Exponent>();
            int total = 0;
            for (int v : e) {
                if (v < 0) {
                    throw ConfigError("jet: negative exponent");
                }
                total += v;
            }
            if (static_cast<int>(e.size()) != in_dim || total != n) {
                throw ConfigError("jet: exponent list does not match in_dim and degree");
            }
            const json& c = field(m, "coeffs");
            if (static_cast<int>(c.size()) != out_dim) {
                throw ConfigError("jet: coefficient vector length must equal out_dim");
            }
            Eigen::VectorXd v(out_dim);
            for (int i = 0; i < out_dim; ++i) {
                v[i] = number_from_json(c[static_cast<std::size_t>(i)]);
            }
            jet[n].set_coeff(e, v);
        }
    }
    return jet;
}

json split_to_json(const SplitChoice& s) {
    return {{"subset", spectrum_to_json(s.subset)},
            {"dim0", s.dim0},
            {"T", matrix_to_json(s.T)},
            {"Tinv", matrix_to_json(s.Tinv)},
            {"A0", matrix_to_json(s.A0)},
            {"A1", matrix_to_json(s.A1)},
            {"B", matrix_to_json(s.B)},
            {"triangularity", number_to_json(s.triangularity)},
            {"gap", number_to_json(s.gap)}};
}

SplitChoice split_from_json(const json& j) {
    SplitChoice s;
    s.subset = spectrum_from_json(field(j, "subset"));
    s.dim0 = int_field(j, "dim0");
    s.T = matrix_from_json(field(j, "T"));
    s.Tinv = matrix_from_json(field(j, "Tinv"));
    s.A0 = matrix_from_json(field(j, "A0"));
    s.A1 = matrix_from_json(field(j, "A1"));
    s.B = matrix_from_json(field(j, "B"));
    s.triangularity = number_from_json(field(j, "triangularity"));
    s.gap = number_from_json(field(j, "gap"));
    return s;
}

json spectrum_report_to_json(const SpectrumReport& r) {
    return {{"eigenvalues", spectrum_to_json(r.eigenvalues)},
            {"spectral_radius", number_to_json(r.spectral_radius)},
            {"diagonalizable", r.diagonalizable},
            {"eigvec_condition", number_to_json(r.eigvec_condition)}};
}

json resonance_report_to_json(const ResonanceReport& r) {
    json h4 = json::array(), h5 = json::array(), warn = json::array();
    for (const auto& v : r.h4_violations) {
        h4.push_back(violation_to_json(v));
    }
    for (const auto& v : r.h5_violations) {
        h5.push_back(violation_to_json(v));
    }
    for (const auto& v : r.warnings) {
        warn.push_back(violation_to_json(v));
    }
    return {{"ell", r.ell ? json(*r.ell) : json(nullptr)},
            {"passes", r.passes()},
            {"growth_ok", r.growth_ok},
            {"growth_margin", number_to_json(r.growth_margin)},
            {"margin", number_to_json(r.margin)},
            {"h4_violations", h4},
            {"h5_violations", h5},
            {"warnings", warn}};
}

json admissibility_to_json(const AdmissibilityReport& r) {
    json hits = json::array();
    for (const auto& h : r.resonance_hits) {
        hits.push_back({{"n", h.n}, {"factors", spectrum_to_json(h.factors)}, {"gap", number_to_json(h.gap)}});
    }
    return {{"lambda", complex_to_json(r.lambda)},
            {"in_spectrum", r.in_spectrum},
            {"distance", number_to_json(r.distance)},
            {"ell", r.ell},
            {"growth_ok", r.growth_ok},
            {"resonance_hits", hits},
            {"simple", r.simple},
            {"multiplicity", r.multiplicity},
            {"passes", r.passes()}};
}

json certificate_to_json(const ScalingCertificate& c) {
    json hist = json::array();
    for (const auto& m : c.history) {
        hist.push_back({{"delta", number_to_json(m.delta)},
                        {"nonlinearity", number_to_json(m.nonlinearity)},
                        {"ball_invariance", m.ball_invariance}});
    }
    return {{"delta", number_to_json(c.delta)},
            {"nonlinearity_norm", number_to_json(c.nonlinearity_norm)},
            {"ball_invariance", c.ball_invariance},
            {"contraction_estimate", number_to_json(c.contraction_estimate)},
            {"decay_constant", number_to_json(c.decay_constant)},
            {"decay_rate", number_to_json(c.decay_rate)},
            {"accepted", c.accepted},
            {"history", hist}};
}

ScalingCertificate certificate_from_json(const json& j) {
    ScalingCertificate c;
    c.delta = number_from_json(field(j, "delta"));
    c.nonlinearity_norm = number_from_json(field(j, "nonlinearity_norm"));
    c.ball_invariance = field(j, "ball_invariance").get<bool>();
    c.contraction_estimate = number_from_json(field(j, "contraction_estimate"));
    c.decay_constant = number_from_json(field(j, "decay_constant"));
    c.decay_rate = number_from_json(field(j, "decay_rate"));
    c.accepted = field(j, "accepted").get<bool>();
    for (const auto& m : field(j, "history")) {
        c.history.push_back({number_from_json(field(m, "delta")), number_from_json(field(m, "nonlinearity")),
                             field(m, "ball_invariance").get<bool>()});
    }
    return c;
}

json defect_to_json(const DefectStats& d) {
    return {{"sup", number_to_json(d.sup)},     {"mean", number_to_json(d.mean)},
            {"points", d.points},               {"skipped", d.skipped},
            {"evaluations", d.evaluations},     {"floor", number_to_json(d.floor)},
            {"tol", number_to_json(d.tol)},     {"passed", d.passed}};
}

json semiconjugacy_to_json(const SemiconjugacyJet& jet) {
    json records = json::array();
    for (const auto& r : jet.records) {
        records.push_back(record_to_json(r));
    }
    json meta = {{"ell", jet.ell},
                 {"N", jet.N},
                 {"mode", to_string(jet.mode)},
                 {"theta", matrix_to_json(jet.theta)},
                 {"split", split_to_json(jet.split)},
                 {"records", records},
                 {"warnings", jet.warnings}};
    return {{"kind", "semiconjugacy"},
            {"metadata", meta},
            {"pi", jet_to_json(jet.pi)},
            {"g", jet_to_json(jet.g)},
            {"pi_adapted", jet_to_json(jet.pi_adapted)}};
}

SemiconjugacyJet semiconjugacy_from_json(const json& j) {
    SemiconjugacyJet jet;
    const json& meta = field(j, "metadata");
    jet.ell = int_field(meta, "ell");
    jet.N = int_field(meta, "N");
    jet.mode = parse_gmode(field(meta, "mode").get<std::string>());
    jet.theta = matrix_from_json(field(meta, "theta"));
    jet.split = split_from_json(field(meta, "split"));
    for (const auto& r : field(meta, "records")) {
        jet.records.push_back(record_from_json(r));
    }
    jet.warnings = field(meta, "warnings").get<std::vector<std::string>>();
    jet.pi = jet_from_json(field(j, "pi"));
    jet.g = jet_from_json(field(j, "g"));
    jet.pi_adapted = jet_from_json(field(j, "pi_adapted"));
    if (jet.pi.out_dim() != jet.g.in_dim() || jet.g.in_dim() != jet.g.out_dim() ||
        jet.split.dim() != jet.pi.in_dim()) {
        throw ConfigError("semiconjugacy: inconsistent dimensions");
    }
    return jet;
}

json foliation_to_json(const FoliationSolution& sol) {
    return {{"kind", "foliation"},
            {"model", sol.model.description},
            {"tau", sol.model.tau ? number_to_json(*sol.model.tau) : json(nullptr)},
            {"delta", number_to_json(sol.delta)},
            {"radius", number_to_json(sol.radius())},
            {"invariance_residual", number_to_json(sol.invariance_residual)},
            {"extension", {{"k_max", sol.extension.k_max}, {"inner", number_to_json(sol.extension.inner)}}},
            {"certificate", certificate_to_json(sol.certificate)},
            {"jet", semiconjugacy_to_json(sol.jet)}};
}

FoliationSolution foliation_from_json(const json& j, const MapModel& model) {
    FoliationSolution sol;
    sol.jet = semiconjugacy_from_json(field(j, "jet"));
    if (sol.jet.dim() != model.dim) {
        throw ConfigError("foliation artifact has dimension " + std::to_string(sol.jet.dim()) +
                          " but the model has " + std::to_string(model.dim));
    }
    sol.model = model;
    sol.delta = number_from_json(field(j, "delta"));
    sol.invariance_residual = number_from_json(field(j, "invariance_residual"));
    const json& ext = field(j, "extension");
    sol.extension.k_max = int_field(ext, "k_max");
    sol.extension.inner = number_from_json(field(ext, "inner"));
    sol.certificate = certificate_from_json(field(j, "certificate"));
    return sol;
}

json eigenfunction_to_json(const KoopmanEigenfunction& ef) {
    json functional = json::array();
    for (Eigen::Index k = 0; k < ef.functional.size(); ++k) {
        functional.push_back(complex_to_json(ef.functional(k)));
    }
    return {{"kind", "koopman"},
            {"lambda", complex_to_json(ef.lambda)},
            {"requested_lambda", complex_to_json(ef.requested_lambda)},
            {"real_valued", ef.real_valued},
            {"realified", ef.realified},
            {"canonical", ef.canonical},
            {"basis_index", ef.basis_index},
            {"gauge", "Dpsi(0) v = 1, v the unit right eigenvector with first largest component real positive"},
            {"functional", functional},
            {"tau", number_to_json(ef.tau)},
            {"domain_radius", number_to_json(ef.domain_radius)},
            {"tau_consistent", ef.tau_consistent},
            {"admissibility", admissibility_to_json(ef.admissibility)},
            {"warnings", ef.warnings},
            {"solution", foliation_to_json(ef.solution)}};
}

KoopmanEigenfunction eigenfunction_from_json(const json& j, const MapModel& model) {
    if (field(j, "kind").get<std::string>() != "koopman") {
        throw ConfigError("not a Koopman eigenfunction artifact");
    }
    KoopmanEigenfunction ef;
    ef.lambda = complex_from_json(field(j, "lambda"));
    ef.requested_lambda = complex_from_json(field(j, "requested_lambda"));
    ef.real_valued = field(j, "real_valued").get<bool>();
    ef.realified = field(j, "realified").get<bool>();
    ef.canonical = field(j, "canonical").get<bool>();
    ef.basis_index = int_field(j, "basis_index");
    const json& f = field(j, "functional");
    ef.functional.resize(static_cast<Eigen::Index>(f.size()));
    for (std::size_t k = 0; k < f.size(); ++k) {
        ef.functional(static_cast<Eigen::Index>(k)) = complex_from_json(f[k]);
    }
    ef.tau = number_from_json(field(j, "tau"));
    ef.domain_radius = number_from_json(field(j, "domain_radius"));
    ef.tau_consistent = field(j, "tau_consistent").get<bool>();
    ef.warnings = field(j, "warnings").get<std::vector<std::string>>();
    const json& adm = field(j, "admissibility");
    ef.admissibility.lambda = complex_from_json(field(adm, "lambda"));
    ef.admissibility.in_spectrum = field(adm, "in_spectrum").get<bool>();
    ef.admissibility.distance = number_from_json(field(adm, "distance"));
    ef.admissibility.ell = int_field(adm, "ell");
    ef.admissibility.growth_ok = field(adm, "growth_ok").get<bool>();
    ef.admissibility.simple = field(adm, "simple").get<bool>();
    ef.admissibility.multiplicity = int_field(adm, "multiplicity");
    for (const auto& h : field(adm, "resonance_hits")) {
        ef.admissibility.resonance_hits.push_back(
            {int_field(h, "n"), spectrum_from_json(field(h, "factors")), number_from_json(field(h, "gap"))});
    }
    ef.solution = foliation_from_json(field(j, "solution"), model);
    if (ef.functional.size() != ef.solution.jet.dim0()) {
        throw ConfigError("Koopman artifact: functional length does not match dim X0");
    }
    return ef;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw ConfigError("write failed for " + path.string());
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

std::string csv_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        out << (i ? "," : "") << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << row[i];
        }
        out << '\n';
    }
}

}  // namespace foliate
