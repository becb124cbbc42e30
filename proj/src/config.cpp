#include "foliate/config.hpp"

#include "foliate/errors.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace foliate {

namespace {

using Table = toml::table;

void check_keys(const Table& t, const std::string& section, std::initializer_list<const char*> allowed) {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, node] : t) {
        if (!ok.count(std::string(key.str()))) {
            throw ConfigError("unknown key \"" + std::string(key.str()) + "\" in [" + section + "]");
        }
    }
}

const Table* subtable(const Table& root, const char* name) {
    const toml::node* n = root.get(name);
    if (!n) {
        return nullptr;
    }
    if (!n->is_table()) {
        throw ConfigError(std::string("[") + name + "] must be a table");
    }
    return n->as_table();
}

double get_double(const toml::node& n, const std::string& what) {
    if (auto v = n.value<double>()) {
        return *v;
    }
    throw ConfigError(what + " must be a number");
}

int get_int(const toml::node& n, const std::string& what) {
    if (!n.is_integer()) {
        throw ConfigError(what + " must be an integer");
    }
    return static_cast<int>(*n.value<std::int64_t>());
}

std::string get_string(const toml::node& n, const std::string& what) {
    if (!n.is_string()) {
        throw ConfigError(what + " must be a string");
    }
    return *n.value<std::string>();
}

template <typename F>
void read(const Table& t, const char* key, const std::string& section, F&& assign) {
    if (const toml::node* n = t.get(key)) {
        assign(*n, section + "." + key);
    }
}

/// A number or an [re, im] pair.
cplx get_complex(const toml::node& n, const std::string& what) {
    if (n.is_number()) {
        return {get_double(n, what), 0.0};
    }
    if (const auto* a = n.as_array(); a && a->size() == 2) {
        return {get_double(*a->get(0), what), get_double(*a->get(1), what)};
    }
    throw ConfigError(what + " must be a number or an [re, im] pair");
}

std::vector<int> get_int_list(const toml::node& n, const std::string& what) {
    const auto* a = n.as_array();
    if (!a) {
        throw ConfigError(what + " must be an array of integers");
    }
    std::vector<int> out;
    for (const auto& e : *a) {
        out.push_back(get_int(e, what));
    }
    return out;
}

ModelKind parse_kind(const std::string& s) {
    if (s == "map") return ModelKind::Map;
    if (s == "flow") return ModelKind::Flow;
    if (s == "chafee_infante") return ModelKind::ChafeeInfante;
    if (s == "ns_kolmogorov") return ModelKind::NsKolmogorov;
    throw ConfigError("unknown model kind \"" + s + "\" (map, flow, chafee_infante, ns_kolmogorov)");
}

ModelSpec parse_model(const Table& t) {
    check_keys(t, "model",
               {"kind", "dim", "terms", "tau", "lambda", "modes", "reynolds", "cutoff", "forcing_wavenumber",
                "amplitude"});
    ModelSpec m;
    const toml::node* kind = t.get("kind");
    if (!kind) {
        throw ConfigError("[model] needs a kind");
    }
    m.kind = parse_kind(get_string(*kind, "model.kind"));
    const std::string s = "model";
    read(t, "dim", s, [&](const auto& n, const auto& w) { m.dim = get_int(n, w); });
    read(t, "tau", s, [&](const auto& n, const auto& w) { m.tau = get_double(n, w); });
    read(t, "lambda", s, [&](const auto& n, const auto& w) { m.ci_lambda = get_double(n, w); });
    read(t, "modes", s, [&](const auto& n, const auto& w) { m.modes = get_int(n, w); });
    read(t, "reynolds", s, [&](const auto& n, const auto& w) { m.kolmogorov.reynolds = get_double(n, w); });
    read(t, "cutoff", s, [&](const auto& n, const auto& w) { m.kolmogorov.cutoff = get_int(n, w); });
    read(t, "forcing_wavenumber", s,
         [&](const auto& n, const auto& w) { m.kolmogorov.forcing_wavenumber = get_int(n, w); });
    read(t, "amplitude", s, [&](const auto& n, const auto& w) { m.kolmogorov.amplitude = get_double(n, w); });
    if (const toml::node* terms = t.get("terms")) {
        const auto* arr = terms->as_array();
        if (!arr) {
            throw ConfigError("model.terms must be an array of tables");
        }
        for (const auto& e : *arr) {
            const auto* tt = e.as_table();
            if (!tt) {
                throw ConfigError("model.terms entries must be tables {out, coeff, exponents}");
            }
            check_keys(*tt, "model.terms", {"out", "coeff", "exponents"});
            PolyTerm term;
            read(*tt, "out", "model.terms", [&](const auto& n, const auto& w) { term.out = get_int(n, w); });
            read(*tt, "coeff", "model.terms", [&](const auto& n, const auto& w) { term.coeff = get_double(n, w); });
            read(*tt, "exponents", "model.terms",
                 [&](const auto& n, const auto& w) { term.exponents = get_int_list(n, w); });
            m.terms.push_back(term);
        }
    }
    if (m.kind == ModelKind::Map || m.kind == ModelKind::Flow) {
        if (m.dim < 1) {
            throw ConfigError("model.dim must be positive for polynomial models");
        }
        if (m.terms.empty()) {
            throw ConfigError("polynomial models need model.terms");
        }
        for (const auto& term : m.terms) {
            if (term.out < 0 || term.out >= m.dim) {
                throw ConfigError("model.terms: out index outside 0.." + std::to_string(m.dim - 1));
            }
            if (static_cast<int>(term.exponents.size()) != m.dim) {
                throw ConfigError("model.terms: exponents must have dim entries");
            }
            if (std::any_of(term.exponents.begin(), term.exponents.end(), [](int v) { return v < 0; })) {
                throw ConfigError("model.terms: negative exponent");
            }
        }
    }
    return m;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

Table parse_toml(const std::string& text, const std::string& source) {
    try {
        return toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "malformed TOML in " << source << ": " << e.description() << " (line " << e.source().begin.line << ")";
        throw ConfigError(os.str());
    }
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config " + path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

JetMap jet_from_terms(const ModelSpec& spec) {
    int order = 1;
    for (const auto& t : spec.terms) {
        int deg = 0;
        for (int e : t.exponents) {
            deg += e;
        }
        if (deg == 0) {
            throw ConfigError("model.terms: constant terms are not allowed (the origin must be fixed)");
        }
        order = std::max(order, deg);
    }
    JetMap jet(spec.dim, spec.dim, order);
    for (const auto& t : spec.terms) {
        int deg = 0;
        for (int e : t.exponents) {
            deg += e;
        }
        Eigen::VectorXd v = jet[deg].coeff(t.exponents);
        v[t.out] += t.coeff;
        jet[deg].set_coeff(t.exponents, v);
    }
    return jet;
}

}  // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Map: return "map";
        case ModelKind::Flow: return "flow";
        case ModelKind::ChafeeInfante: return "chafee_infante";
        case ModelKind::NsKolmogorov: return "ns_kolmogorov";
    }
    return "map";
}

void RunConfig::validate() const {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError(std::string(what) + " must be positive");
        }
    };
    positive(split.match_tol, "split.match_tol");
    positive(split.gap_tol, "split.gap_tol");
    positive(solve.tol_res, "solve.tol_res");
    positive(solve.target_nonlinearity, "solve.target_nonlinearity");
    positive(solve.residual_tol, "solve.residual_tol");
    positive(koopman.domain_tol, "koopman.domain_tol");
    positive(verify.tol, "verify.tol");
    if (model.tau) {
        positive(*model.tau, "model.tau");
    }
    if (verify.horizon < 0.0) {
        throw ConfigError("verify.horizon must be nonnegative");
    }
    if (solve.ell && *solve.ell < 1) {
        throw ConfigError("solve.ell must be at least 1");
    }
    if (solve.ell && solve.N < *solve.ell) {
        throw ConfigError("solve.N must be at least solve.ell");
    }
    if (solve.N < 1 || koopman.N < 1) {
        throw ConfigError("N must be at least 1");
    }
    if (koopman.ell && (*koopman.ell < 1 || koopman.N < *koopman.ell)) {
        throw ConfigError("koopman.N must be at least koopman.ell and koopman.ell at least 1");
    }
    if (solve.samples < 1 || verify.n_points < 0 || verify.time_samples < 1 || verify.grid_points < 0) {
        throw ConfigError("sample counts must be positive");
    }
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    const Table root = parse_toml(text, "config");
    check_keys(root, "", {"name", "model", "split", "solve", "koopman", "verify", "output"});
    RunConfig c;
    read(root, "name", "", [&](const auto& n, const auto& w) { c.name = get_string(n, w); });

    const Table* model = subtable(root, "model");
    if (!model) {
        throw ConfigError("config needs a [model] section");
    }
    if (const toml::node* file = model->get("file")) {
        if (model->size() != 1) {
            throw ConfigError("[model] with file = ... takes no other keys");
        }
        const auto path = resolve(base_dir, get_string(*file, "model.file"));
        const Table other = parse_toml(slurp(path), path.string());
        const Table* inner = subtable(other, "model");
        c.model = parse_model(inner ? *inner : other);
    } else {
        c.model = parse_model(*model);
    }

    if (const Table* t = subtable(root, "split")) {
        check_keys(*t, "split", {"indices", "values", "match_tol", "gap_tol"});
        read(*t, "indices", "split", [&](const auto& n, const auto& w) { c.split.indices = get_int_list(n, w); });
        read(*t, "values", "split", [&](const auto& n, const auto& w) {
            const auto* a = n.as_array();
            if (!a) {
                throw ConfigError(w + " must be an array");
            }
            for (const auto& e : *a) {
                c.split.values.push_back(get_complex(e, w));
            }
        });
        read(*t, "match_tol", "split", [&](const auto& n, const auto& w) { c.split.match_tol = get_double(n, w); });
        read(*t, "gap_tol", "split", [&](const auto& n, const auto& w) { c.split.gap_tol = get_double(n, w); });
        if (!c.split.indices.empty() && !c.split.values.empty()) {
            throw ConfigError("[split] takes indices or values, not both");
        }
    }

    if (const Table* t = subtable(root, "solve")) {
        check_keys(*t, "solve", {"ell", "N", "mode", "tol_res", "target_nonlinearity", "samples", "residual_tol"});
        read(*t, "ell", "solve", [&](const auto& n, const auto& w) {
            if (n.is_string() && get_string(n, w) == "auto") {
                c.solve.ell.reset();
            } else {
                c.solve.ell = get_int(n, w);
            }
        });
        read(*t, "N", "solve", [&](const auto& n, const auto& w) { c.solve.N = get_int(n, w); });
        read(*t, "mode", "solve", [&](const auto& n, const auto& w) {
            try {
                c.solve.mode = parse_gmode(get_string(n, w));
            } catch (const Error& e) {
                throw ConfigError(e.what());
            }
        });
        read(*t, "tol_res", "solve", [&](const auto& n, const auto& w) { c.solve.tol_res = get_double(n, w); });
        read(*t, "target_nonlinearity", "solve",
             [&](const auto& n, const auto& w) { c.solve.target_nonlinearity = get_double(n, w); });
        read(*t, "samples", "solve", [&](const auto& n, const auto& w) { c.solve.samples = get_int(n, w); });
        read(*t, "residual_tol", "solve",
             [&](const auto& n, const auto& w) { c.solve.residual_tol = get_double(n, w); });
    }

    if (const Table* t = subtable(root, "koopman")) {
        check_keys(*t, "koopman", {"lambda", "N", "ell", "domain_tol"});
        read(*t, "lambda", "koopman", [&](const auto& n, const auto& w) {
            if (n.is_string()) {
                if (get_string(n, w) != "least_stable") {
                    throw ConfigError(w + " must be a number, an [re, im] pair or \"least_stable\"");
                }
                c.koopman.lambda.reset();
            } else {
                c.koopman.lambda = get_complex(n, w);
            }
        });
        read(*t, "N", "koopman", [&](const auto& n, const auto& w) { c.koopman.N = get_int(n, w); });
        read(*t, "ell", "koopman", [&](const auto& n, const auto& w) { c.koopman.ell = get_int(n, w); });
        read(*t, "domain_tol", "koopman",
             [&](const auto& n, const auto& w) { c.koopman.domain_tol = get_double(n, w); });
    }

    if (const Table* t = subtable(root, "verify")) {
        check_keys(*t, "verify", {"n_points", "horizon", "time_samples", "tol", "grid_points"});
        read(*t, "n_points", "verify", [&](const auto& n, const auto& w) { c.verify.n_points = get_int(n, w); });
        read(*t, "horizon", "verify", [&](const auto& n, const auto& w) { c.verify.horizon = get_double(n, w); });
        read(*t, "time_samples", "verify",
             [&](const auto& n, const auto& w) { c.verify.time_samples = get_int(n, w); });
        read(*t, "tol", "verify", [&](const auto& n, const auto& w) { c.verify.tol = get_double(n, w); });
        read(*t, "grid_points", "verify",
             [&](const auto& n, const auto& w) { c.verify.grid_points = get_int(n, w); });
    }

    if (const Table* t = subtable(root, "output")) {
        check_keys(*t, "output", {"dir", "seed"});
        read(*t, "dir", "output",
             [&](const auto& n, const auto& w) { c.out_dir = resolve(base_dir, get_string(n, w)); });
        read(*t, "seed", "output", [&](const auto& n, const auto& w) {
            const int s = get_int(n, w);
            if (s < 0) {
                throw ConfigError(w + " must be nonnegative");
            }
            c.seed = static_cast<std::uint64_t>(s);
        });
    }

    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw ConfigError("config file not found: " + path.string());
    }
    return parse_config(slurp(path), path.parent_path().empty() ? "." : path.parent_path());
}

RunConfig demo_config(const std::string& name) {
    RunConfig c;
    if (name == "chafee-infante") {
        c.name = "chafee-infante";
        c.model.kind = ModelKind::ChafeeInfante;
        c.model.ci_lambda = 0.5;
        c.model.modes = 8;
        c.koopman.N = 7;
        c.koopman.domain_tol = 1e-7;
        c.verify.horizon = 10.0;
        c.verify.tol = 1e-6;
    } else if (name == "ns-kolmogorov") {
        c.name = "ns-kolmogorov";
        c.model.kind = ModelKind::NsKolmogorov;
        c.model.kolmogorov = KolmogorovOptions{10.0, 2, 1, 1.0};
        c.koopman.N = 3;
        c.koopman.domain_tol = 1e-6;
        c.verify.horizon = 10.0;
        c.verify.tol = 1e-5;
    } else {
        throw ConfigError("unknown demo \"" + name + "\" (chafee-infante, ns-kolmogorov)");
    }
    c.verify.n_points = 100;
    c.out_dir = "foliate_" + name;
    c.validate();
    return c;
}

bool is_flow(const ModelSpec& spec) { return spec.kind != ModelKind::Map; }

MapModel build_map(const ModelSpec& spec) {
    if (spec.kind != ModelKind::Map) {
        throw ConfigError("build_map: model kind " + to_string(spec.kind) + " is a flow");
    }
    MapModel m = make_polynomial_map(jet_from_terms(spec));
    m.description = "polynomial map, dim " + std::to_string(spec.dim);
    return m;
}

FlowModel build_flow(const ModelSpec& spec) {
    switch (spec.kind) {
        case ModelKind::Flow: {
            FlowModel f = make_polynomial_flow(jet_from_terms(spec));
            f.description = "polynomial flow, dim " + std::to_string(spec.dim);
            return f;
        }
        case ModelKind::ChafeeInfante:
            return build_chafee_infante(spec.ci_lambda, spec.modes);
        case ModelKind::NsKolmogorov:
            return build_ns_kolmogorov(spec.kolmogorov).flow;
        case ModelKind::Map:
            break;
    }
    throw ConfigError("build_flow: model kind map is not a flow");
}

}  // namespace foliate
