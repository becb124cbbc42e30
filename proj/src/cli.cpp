#include "foliate/cli.hpp"

#include "foliate/config.hpp"
#include "foliate/contour.hpp"
#include "foliate/errors.hpp"
#include "foliate/io.hpp"
#include "foliate/koopman.hpp"
#include "foliate/log.hpp"
#include "foliate/sampling.hpp"

#include <CLI11.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace foliate {

namespace {

struct Flags {
    std::string config;
    bool force = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::string log_level = "normal";
    std::vector<std::string> artifacts;
    std::string demo;
};

/// A failed check rather than an error; maps to exit code 2.
class CheckFailed : public Error {
public:
    using Error::Error;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Output directory with an exclusive lock file; records every file it writes.
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) {
            throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
        }
        lock_ = dir_ / ".foliate.lock";
        fd_ = ::open(lock_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) {
            if (errno == EEXIST) {
                throw ConfigError("output directory " + dir_.string() + " is in use by another run (lock file " +
                                  lock_.string() + ")");
            }
            throw ConfigError("cannot create lock file " + lock_.string() + ": " + std::strerror(errno));
        }
        const std::string pid = std::to_string(::getpid()) + "\n";
        [[maybe_unused]] const auto n = ::write(fd_, pid.data(), pid.size());
    }
    ~OutputDir() {
        ::close(fd_);
        std::error_code ec;
        std::filesystem::remove(lock_, ec);
    }
    OutputDir(const OutputDir&) = delete;
    OutputDir& operator=(const OutputDir&) = delete;

    const std::filesystem::path& dir() const { return dir_; }

    void json_file(const std::string& name, const json& j) {
        write_json_file(dir_ / name, j);
        record(name);
    }
    void csv_file(const std::string& name, const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows) {
        write_csv(dir_ / name, header, rows);
        record(name);
    }
    const std::vector<std::string>& written() const { return written_; }

private:
    void record(const std::string& name) {
        if (std::find(written_.begin(), written_.end(), name) == written_.end()) {
            written_.push_back(name);
        }
    }

    std::filesystem::path dir_;
    std::filesystem::path lock_;
    int fd_ = -1;
    std::vector<std::string> written_;
};

struct Run {
    RunConfig config;
    Flags flags;
    OutputDir* out = nullptr;
    json report = json::object();
    json timings = json::object();
    bool quiet = false;

    void say(const std::string& line) const {
        if (!quiet) {
            std::cout << line << '\n';
        }
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

std::string fmt(cplx z) {
    std::ostringstream os;
    os << std::setprecision(6) << z.real();
    if (z.imag() != 0.0) {
        os << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
    }
    return os.str();
}

bool close_to(cplx a, cplx b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

/// Every eigenvalue near a requested value (or its conjugate); the default request is the
/// first eigenvalue of the ordered spectrum.
Spectrum choose_subset(const Spectrum& ordered, const SplitSpec& spec) {
    Spectrum wanted;
    if (!spec.indices.empty()) {
        for (int i : spec.indices) {
            if (i < 0 || i >= static_cast<int>(ordered.size())) {
                throw ConfigError("split.indices: index " + std::to_string(i) + " outside 0.." +
                                  std::to_string(ordered.size() - 1));
            }
            wanted.push_back(ordered[static_cast<std::size_t>(i)]);
        }
    } else if (!spec.values.empty()) {
        wanted = spec.values;
    } else {
        wanted.push_back(ordered.front());
    }
    Spectrum subset;
    for (const auto& w : wanted) {
        bool found = false;
        for (const auto& z : ordered) {
            if (close_to(z, w, spec.match_tol) || close_to(z, std::conj(w), spec.match_tol)) {
                found = true;
            }
        }
        if (!found) {
            throw ConfigError("split: " + fmt(w) + " is not an eigenvalue (match_tol " + fmt(spec.match_tol) + ")");
        }
    }
    for (const auto& z : ordered) {
        for (const auto& w : wanted) {
            if (close_to(z, w, spec.match_tol) || close_to(z, std::conj(w), spec.match_tol)) {
                subset.push_back(z);
                break;
            }
        }
    }
    return subset;
}

Spectrum complement(const Spectrum& all, const Spectrum& subset) {
    Spectrum rest;
    for (const auto& z : all) {
        if (std::find(subset.begin(), subset.end(), z) == subset.end()) {
            rest.push_back(z);
        }
    }
    return rest;
}

Spectrum eigenvalues_of(const Eigen::MatrixXd& M) {
    return M.size() == 0 ? Spectrum{} : compute_spectrum(M).eigenvalues;
}

struct Setup {
    std::optional<FlowModel> flow;
    MapModel map;
    double tau = 0.0;
    SpectrumReport spectrum_map;
    std::optional<SpectrumReport> spectrum_generator;
    Spectrum omega;
    SplitChoice split;
    int ell = 1;
    int ell_minimal = 1;
    ResonanceReport map_report;
    std::optional<ResonanceReport> generator_report;
    bool passes = false;
};

bool report_passes(const ResonanceReport& r, GMode mode) {
    return r.growth_ok && r.h4_violations.empty() && (mode != GMode::NormalForm || r.h5_violations.empty());
}

Setup setup(const RunConfig& cfg, int N_jet) {
    Setup s;
    Spectrum subsetA;
    if (is_flow(cfg.model)) {
        s.flow = build_flow(cfg.model);
        s.spectrum_generator = compute_spectrum(s.flow->G, SpectrumOrder::RealPart);
        const Spectrum& sigmaG = s.spectrum_generator->eigenvalues;
        s.tau = cfg.model.tau ? *cfg.model.tau : default_tau(sigmaG);
        s.map = time_tau_map(*s.flow, s.tau, N_jet);
        s.omega = choose_subset(sigmaG, cfg.split);
        for (const auto& z : s.omega) {
            subsetA.push_back(std::exp(s.tau * z));
        }
    } else {
        s.map = build_map(cfg.model);
        subsetA = choose_subset(compute_spectrum(s.map.A).eigenvalues, cfg.split);
    }
    s.spectrum_map = compute_spectrum(s.map.A);
    s.split = make_split_choice(s.map.A, subsetA, cfg.split.gap_tol, cfg.split.match_tol);
    const Spectrum sigma0 = eigenvalues_of(s.split.A0);
    const Spectrum sigma1 = eigenvalues_of(s.split.A1);
    s.ell_minimal = *select_ell(sigma0, s.spectrum_map.eigenvalues, 1000).minimal;
    s.ell = cfg.solve.ell ? *cfg.solve.ell : s.ell_minimal;
    s.map_report = check_H4(sigma0, sigma1, s.ell, cfg.solve.tol_res);
    s.map_report.absorb(check_H5(sigma0, s.ell, 2, cfg.solve.tol_res));
    s.map_report.growth_ok = s.ell >= s.ell_minimal;
    s.passes = report_passes(s.map_report, cfg.solve.mode);
    if (s.flow) {
        const Spectrum& sigmaG = s.spectrum_generator->eigenvalues;
        s.generator_report = check_generator_conditions(sigmaG, s.omega, complement(sigmaG, s.omega), s.ell, 2,
                                                        cfg.solve.tol_res);
        s.passes = s.passes && report_passes(*s.generator_report, cfg.solve.mode);
    }
    return s;
}

json setup_to_json(const Setup& s, GMode mode) {
    json j = {{"tau", s.flow ? number_to_json(s.tau) : json(nullptr)},
              {"spectrum_map", spectrum_report_to_json(s.spectrum_map)},
              {"spectrum_generator",
               s.spectrum_generator ? spectrum_report_to_json(*s.spectrum_generator) : json(nullptr)},
              {"subset_generator", s.flow ? spectrum_to_json(s.omega) : json(nullptr)},
              {"subset_map", spectrum_to_json(s.split.subset)},
              {"dim", s.split.dim()},
              {"dim0", s.split.dim0},
              {"split_gap", number_to_json(s.split.gap)},
              {"triangularity", number_to_json(s.split.triangularity)},
              {"ell", s.ell},
              {"ell_minimal", s.ell_minimal},
              {"mode", to_string(mode)},
              {"spectral_mapping_error", s.flow ? number_to_json(s.map.spectral_mapping_error) : json(nullptr)},
              {"map_conditions", resonance_report_to_json(s.map_report)},
              {"generator_conditions",
               s.generator_report ? resonance_report_to_json(*s.generator_report) : json(nullptr)},
              {"passes", s.passes}};
    return j;
}

void describe_violations(const Run& run, const ResonanceReport& r, GMode mode) {
    if (!r.growth_ok) {
        run.say("  growth condition fails at ell = " + std::to_string(r.ell.value_or(0)));
    }
    auto list = [&](const std::vector<ResonanceViolation>& vs) {
        for (const auto& v : vs) {
            std::string factors;
            for (const auto& z : v.factors) {
                factors += (factors.empty() ? "" : ", ") + fmt(z);
            }
            run.say("  " + v.condition + " n = " + std::to_string(v.n) + ", j = " + std::to_string(v.j) + ": {" +
                    factors + "} -> " + fmt(v.value) + " vs " + fmt(v.target) + " (gap " + fmt(v.gap) + ")");
        }
    };
    list(r.h4_violations);
    if (mode == GMode::NormalForm) {
        list(r.h5_violations);
    }
}

int cmd_check_spectrum(Run& run) {
    Stopwatch clock;
    const Setup s = setup(run.config, 1);
    run.out->json_file("spectrum.json", setup_to_json(s, run.config.solve.mode));
    run.timings["check"] = clock.seconds();
    run.report["spectrum"] = "spectrum.json";
    run.say("spectral radius " + fmt(s.spectrum_map.spectral_radius) + ", dim X0 = " + std::to_string(s.split.dim0) +
            ", ell = " + std::to_string(s.ell));
    describe_violations(run, s.map_report, run.config.solve.mode);
    if (s.generator_report) {
        describe_violations(run, *s.generator_report, run.config.solve.mode);
    }
    if (!s.passes) {
        throw CheckFailed("nonresonance conditions fail");
    }
    run.say("nonresonance conditions pass");
    return kExitOk;
}

std::vector<std::vector<std::string>> residual_rows(const ResidualProfile& p) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t n = 0; n < p.absolute.size(); ++n) {
        rows.push_back({std::to_string(n), csv_number(p.absolute[n]), csv_number(p.relative(static_cast<int>(n)))});
    }
    return rows;
}

void log_divisors(const SemiconjugacyJet& jet) {
    for (const auto& rec : jet.records) {
        for (const auto& c : rec.classes) {
            log_debug("degree " + std::to_string(rec.degree) + " weight " + std::to_string(c.weight) +
                      ": min divisor " + fmt(c.min_divisor) + ", relative gap " + fmt(c.relative_gap) +
                      (c.sparse ? " (sparse)" : ""));
        }
    }
}

int cmd_solve_foliation(Run& run) {
    const RunConfig& cfg = run.config;
    Stopwatch clock;
    const Setup s = setup(cfg, cfg.solve.N);
    run.timings["setup"] = clock.seconds();
    run.out->json_file("spectrum.json", setup_to_json(s, cfg.solve.mode));
    run.report["spectrum"] = "spectrum.json";
    if (s.ell > cfg.solve.N) {
        throw ConfigError("solve.N = " + std::to_string(cfg.solve.N) + " is below ell = " + std::to_string(s.ell));
    }
    if (!s.passes) {
        describe_violations(run, s.map_report, cfg.solve.mode);
        if (!run.flags.force) {
            throw CheckFailed("nonresonance conditions fail (use --force to attempt the solve)");
        }
        run.say("--force: solving despite failed checks");
    }

    Stopwatch solve_clock;
    SolveJetOptions opts;
    opts.order.tol_res = cfg.solve.tol_res;
    SemiconjugacyJet jet = solve_jet(s.map, s.split, s.ell, cfg.solve.N, cfg.solve.mode, opts);
    log_divisors(jet);
    run.timings["solve_jet"] = solve_clock.seconds();
    const ResidualProfile residual = jet_residual(jet, s.map.jet, cfg.solve.N);

    Stopwatch scale_clock;
    ScalingOptions sopts;
    sopts.target_nonlinearity = cfg.solve.target_nonlinearity;
    sopts.samples = cfg.solve.samples;
    sopts.seed = cfg.seed;
    ScalingCertificate cert = select_scaling(s.map, sopts);
    const FoliationSolution sol = make_foliation_solution(s.map, jet, cert, {}, cfg.solve.samples, cfg.seed);
    run.timings["scaling"] = scale_clock.seconds();

    run.out->json_file("semiconjugacy.json", semiconjugacy_to_json(sol.jet));
    run.out->json_file("foliation.json", foliation_to_json(sol));
    run.out->csv_file("residuals.csv", {"degree", "absolute", "relative"}, residual_rows(residual));

    const double worst = residual.max_relative(0, cfg.solve.N);
    run.report["residual_max_relative"] = number_to_json(worst);
    run.report["residual_tol"] = cfg.solve.residual_tol;
    run.report["delta"] = number_to_json(sol.delta);
    run.report["invariance_residual"] = number_to_json(sol.invariance_residual);
    run.report["certificate"] = certificate_to_json(sol.certificate);
    run.say("solved to N = " + std::to_string(cfg.solve.N) + " (ell = " + std::to_string(s.ell) +
            "), max relative residual " + fmt(worst) + ", delta " + fmt(sol.delta));
    if (!(worst <= cfg.solve.residual_tol)) {
        throw CheckFailed("homological residual " + fmt(worst) + " exceeds " + fmt(cfg.solve.residual_tol));
    }
    return kExitOk;
}

VerifyOptions verify_options(const RunConfig& cfg) {
    if (cfg.verify.n_points < 1) {
        throw ConfigError("verify.n_points is 0: empty sample set");
    }
    VerifyOptions v;
    v.n_points = cfg.verify.n_points;
    v.horizon = cfg.verify.horizon;
    v.time_samples = cfg.verify.time_samples;
    v.tol = cfg.verify.tol;
    v.seed = cfg.seed;
    return v;
}

void write_level_sets(Run& run, const KoopmanEigenfunction& ef, const std::string& name) {
    const int d = ef.solution.jet.dim();
    if (d < 2) {
        return;
    }
    const int n = 41;
    const double h = ef.domain_radius / std::sqrt(2.0);
    const Eigen::VectorXd axis = Eigen::VectorXd::LinSpaced(n, -h, h);
    Eigen::MatrixXd values(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
            x[0] = axis[i];
            x[1] = axis[j];
            values(i, j) = ef.value_jet(x).real();
        }
    }
    const double lo = values.minCoeff();
    const double hi = values.maxCoeff();
    std::vector<std::vector<std::string>> rows;
    int id = 0;
    for (int k = 1; k <= 7 && hi > lo; ++k) {
        const double level = lo + k * (hi - lo) / 8.0;
        for (const auto& line : level_set_polylines(axis, axis, values, level)) {
            for (const auto& p : line) {
                rows.push_back({csv_number(level), std::to_string(id), csv_number(p[0]), csv_number(p[1])});
            }
            ++id;
        }
    }
    run.out->csv_file(name, {"level", "polyline", "x0", "x1"}, rows);
}

void write_defects(Run& run, const DefectStats& stats, const std::string& name) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < stats.per_point.size(); ++i) {
        rows.push_back({std::to_string(i), csv_number(stats.per_point[i])});
    }
    run.out->csv_file(name, {"point", "defect"}, rows);
}

struct KoopmanOutcome {
    std::vector<KoopmanEigenfunction> functions;
    std::vector<DefectStats> defects;
};

KoopmanOutcome koopman_pipeline(Run& run) {
    const RunConfig& cfg = run.config;
    if (!is_flow(cfg.model)) {
        throw ConfigError("solve-koopman needs a flow model (kind = flow, chafee_infante or ns_kolmogorov)");
    }
    const VerifyOptions vopts = verify_options(cfg);
    Stopwatch clock;
    const FlowModel flow = build_flow(cfg.model);
    const Spectrum sigmaG = compute_spectrum(flow.G, SpectrumOrder::RealPart).eigenvalues;
    const cplx lambda = cfg.koopman.lambda ? *cfg.koopman.lambda : sigmaG.front();
    run.report["lambda"] = complex_to_json(lambda);
    run.report["spectrum_generator"] = spectrum_to_json(sigmaG);

    const MembershipResult member = eigenvalue_membership(lambda, sigmaG);
    if (!member.member) {
        run.report["refusal"] = {{"reason", "not an eigenvalue of G"},
                                 {"distance", number_to_json(member.distance)},
                                 {"nearest", complex_to_json(member.nearest)}};
        throw CheckFailed("lambda = " + fmt(lambda) + " is not an eigenvalue of G (nearest " + fmt(member.nearest) +
                          ", distance " + fmt(member.distance) + "); no eigenfunction at a stable point exists");
    }
    const int ell = cfg.koopman.ell ? *cfg.koopman.ell : *select_ell_generator({member.nearest}, sigmaG, 1000).minimal;
    if (cfg.koopman.N < ell) {
        throw ConfigError("koopman.N = " + std::to_string(cfg.koopman.N) + " is below ell = " + std::to_string(ell));
    }
    const AdmissibilityReport adm = admissibility(member.nearest, sigmaG, ell);
    run.report["admissibility"] = admissibility_to_json(adm);
    if (!adm.passes()) {
        std::string why = adm.growth_ok ? "resonant" : "growth condition fails";
        for (const auto& hit : adm.resonances()) {
            why += "; n = " + std::to_string(hit.n) + " sum of {";
            for (std::size_t i = 0; i < hit.factors.size(); ++i) {
                why += (i ? ", " : "") + fmt(hit.factors[i]);
            }
            why += "}";
        }
        if (!run.flags.force) {
            run.report["refusal"] = {{"reason", why}};
            throw CheckFailed("lambda = " + fmt(lambda) + " is not admissible: " + why);
        }
        run.say("--force: attempting the construction despite: " + why);
    }

    KoopmanOptions kopts;
    kopts.tau = cfg.model.tau;
    kopts.ell = ell;
    kopts.domain_tol = cfg.koopman.domain_tol;
    kopts.scaling.target_nonlinearity = cfg.solve.target_nonlinearity;
    kopts.scaling.samples = cfg.solve.samples;
    kopts.scaling.seed = cfg.seed;
    kopts.order.tol_res = cfg.solve.tol_res;
    KoopmanOutcome outcome;
    outcome.functions = build_eigenfunctions(flow, lambda, cfg.koopman.N, kopts);
    for (const auto& ef : outcome.functions) {
        log_divisors(ef.solution.jet);
    }
    run.timings["build"] = clock.seconds();

    Stopwatch verify_clock;
    json summaries = json::array();
    const bool several = outcome.functions.size() > 1;
    for (std::size_t k = 0; k < outcome.functions.size(); ++k) {
        const auto& ef = outcome.functions[k];
        const std::string suffix = several ? "_" + std::to_string(k) : "";
        DefectStats stats = verify_eigenfunction(ef, flow, vopts);
        if (stats.points == 0) {
            throw Error("every verification trajectory failed; empty sample set");
        }
        run.out->json_file("koopman" + suffix + ".json", eigenfunction_to_json(ef));
        write_defects(run, stats, "defects" + suffix + ".csv");
        write_level_sets(run, ef, "level_sets" + suffix + ".csv");
        summaries.push_back({{"artifact", "koopman" + suffix + ".json"},
                             {"lambda", complex_to_json(ef.lambda)},
                             {"canonical", ef.canonical},
                             {"tau", number_to_json(ef.tau)},
                             {"domain_radius", number_to_json(ef.domain_radius)},
                             {"spectral_mapping_error", number_to_json(ef.solution.model.spectral_mapping_error)},
                             {"tau_consistent", ef.tau_consistent},
                             {"warnings", ef.warnings},
                             {"defect", defect_to_json(stats)}});
        run.say("eigenfunction" + suffix + " for lambda = " + fmt(ef.lambda) + ": radius " + fmt(ef.domain_radius) +
                ", defect sup " + fmt(stats.sup) + " over " + std::to_string(stats.points) + " points (tol " +
                fmt(stats.tol) + ")");
        outcome.defects.push_back(std::move(stats));
    }
    run.timings["verify"] = verify_clock.seconds();
    run.report["eigenfunctions"] = summaries;
    return outcome;
}

int cmd_solve_koopman(Run& run) {
    const KoopmanOutcome outcome = koopman_pipeline(run);
    for (const auto& d : outcome.defects) {
        if (!d.passed) {
            throw CheckFailed("eigenfunction defect " + fmt(d.sup) + " exceeds " + fmt(d.tol));
        }
    }
    return kExitOk;
}

std::string stem_of(const std::string& path) { return std::filesystem::path(path).stem().string(); }

bool verify_koopman_artifact(Run& run, const json& j, const std::string& stem, json& entry) {
    const RunConfig& cfg = run.config;
    const VerifyOptions vopts = verify_options(cfg);
    if (!is_flow(cfg.model)) {
        throw ConfigError("a Koopman artifact needs a flow model in the config");
    }
    const FlowModel flow = build_flow(cfg.model);
    const json& jet = j.at("solution").at("jet");
    const int N = jet.at("metadata").at("N").get<int>();
    const int dim = jet.at("pi").at("in_dim").get<int>();
    if (dim != flow.dim) {
        throw ConfigError("artifact dimension " + std::to_string(dim) + " does not match the model (" +
                          std::to_string(flow.dim) + ")");
    }
    const MapModel map = time_tau_map(flow, number_from_json(j.at("tau")), N);
    const KoopmanEigenfunction ef = eigenfunction_from_json(j, map);
    const DefectStats stats = verify_eigenfunction(ef, flow, vopts);
    if (stats.points == 0) {
        throw Error("every verification trajectory failed; empty sample set");
    }
    write_defects(run, stats, "verify_" + stem + "_defects.csv");
    entry["defect"] = defect_to_json(stats);
    run.say(stem + ": defect sup " + fmt(stats.sup) + " (tol " + fmt(stats.tol) + ")");
    return stats.passed;
}

bool verify_jet_artifact(Run& run, const json& j, const std::string& stem, json& entry) {
    const RunConfig& cfg = run.config;
    const bool foliation = j.at("kind") == "foliation";
    const json& jj = foliation ? j.at("jet") : j;
    const int N = jj.at("metadata").at("N").get<int>();
    MapModel model;
    if (is_flow(cfg.model)) {
        const FlowModel flow = build_flow(cfg.model);
        const json& tau = j.contains("tau") ? j.at("tau") : json(nullptr);
        if (tau.is_null()) {
            throw ConfigError("artifact carries no tau but the config describes a flow");
        }
        model = time_tau_map(flow, number_from_json(tau), N);
    } else {
        model = build_map(cfg.model);
    }
    const SemiconjugacyJet jet = semiconjugacy_from_json(jj);
    if (jet.dim() != model.dim) {
        throw ConfigError("artifact dimension " + std::to_string(jet.dim()) + " does not match the model (" +
                          std::to_string(model.dim) + ")");
    }
    const double jet_res = jet_residual(jet, model.jet, N).max_relative(0, N);
    entry["residual_max_relative"] = number_to_json(jet_res);
    entry["residual_tol"] = cfg.solve.residual_tol;
    bool ok = jet_res <= cfg.solve.residual_tol;
    if (foliation) {
        if (cfg.verify.n_points < 1) {
            throw ConfigError("verify.n_points is 0: empty sample set");
        }
        const FoliationSolution sol = foliation_from_json(j, model);
        const auto samples = ball_samples(model.dim, cfg.verify.n_points, cfg.seed, sol.radius());
        std::vector<std::vector<std::string>> rows;
        double sup = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const Eigen::VectorXd& x = samples[i];
            const double r = (sol.g(sol.pi(x)) - sol.pi(model.eval(x))).norm();
            sup = std::max(sup, r);
            rows.push_back({std::to_string(i), csv_number(r)});
        }
        run.out->csv_file("verify_" + stem + "_residuals.csv", {"point", "residual"}, rows);
        const double allowed = 10.0 * sol.invariance_residual + 1e-14;
        entry["invariance_residual"] = number_to_json(sup);
        entry["invariance_allowed"] = number_to_json(allowed);
        ok = ok && sup <= allowed;
        run.say(stem + ": jet residual " + fmt(jet_res) + ", sampled invariance residual " + fmt(sup) +
                " (allowed " + fmt(allowed) + ")");
    } else {
        run.say(stem + ": jet residual " + fmt(jet_res));
    }
    return ok;
}

int cmd_verify(Run& run) {
    if (run.flags.artifacts.empty()) {
        throw ConfigError("verify needs at least one --artifact");
    }
    Stopwatch clock;
    json entries = json::array();
    bool all = true;
    for (const auto& path : run.flags.artifacts) {
        const json j = read_json_file(path);
        if (!j.is_object() || !j.contains("kind")) {
            throw ConfigError(path + " is not a foliate artifact");
        }
        const std::string kind = j.at("kind").get<std::string>();
        json entry = {{"artifact", path}, {"kind", kind}};
        bool ok = false;
        try {
            if (kind == "koopman") {
                ok = verify_koopman_artifact(run, j, stem_of(path), entry);
            } else if (kind == "foliation" || kind == "semiconjugacy") {
                ok = verify_jet_artifact(run, j, stem_of(path), entry);
            } else {
                throw ConfigError(path + ": unknown artifact kind \"" + kind + "\"");
            }
        } catch (const json::exception& e) {
            throw ConfigError(path + ": malformed artifact: " + e.what());
        }
        entry["passed"] = ok;
        all = all && ok;
        entries.push_back(entry);
    }
    run.report["verified"] = entries;
    run.timings["verify"] = clock.seconds();
    if (!all) {
        throw CheckFailed("verification failed");
    }
    return kExitOk;
}

int cmd_demo(Run& run) {
    const std::string& name = run.flags.demo;
    KoopmanOutcome outcome = koopman_pipeline(run);
    json checks = json::array();
    bool all = true;
    auto check = [&](const std::string& what, double value, double threshold, bool passed) {
        checks.push_back({{"check", what},
                          {"value", number_to_json(value)},
                          {"threshold", number_to_json(threshold)},
                          {"passed", passed}});
        run.say(std::string(passed ? "PASS " : "FAIL ") + what + ": " + fmt(value) + " (threshold " + fmt(threshold) +
                ")");
        all = all && passed;
    };
    const auto adm = run.report.at("admissibility");
    check("least-stable eigenvalue admissible", adm.at("passes").get<bool>() ? 1.0 : 0.0, 1.0,
          adm.at("passes").get<bool>());
    double defect = 0.0;
    for (const auto& d : outcome.defects) {
        defect = std::max(defect, d.sup);
    }
    check("eigenfunction defect sup", defect, run.config.verify.tol, defect <= run.config.verify.tol);
    const double mapping = outcome.functions.front().solution.model.spectral_mapping_error;
    check("spectral mapping error", mapping, 1e-8, mapping <= 1e-8);
    if (run.config.model.kind == ModelKind::NsKolmogorov) {
        const KolmogorovModel ns = build_ns_kolmogorov(run.config.model.kolmogorov);
        double worst = 0.0;
        for (const auto& u : ball_samples(ns.flow.dim, 200, run.config.seed, 1.0)) {
            worst = std::max(worst, std::abs(ns.B(u, u).dot(u)));
        }
        check("energy conservation |<B(u,u), u>|", worst, 1e-12, worst <= 1e-12);
    }
    run.report["demo"] = name;
    run.report["checks"] = checks;
    if (!all) {
        throw CheckFailed("demo " + name + ": some checks fail");
    }
    return kExitOk;
}

int dispatch(const std::string& command, Run& run) {
    if (command == "check-spectrum") return cmd_check_spectrum(run);
    if (command == "solve-foliation") return cmd_solve_foliation(run);
    if (command == "solve-koopman") return cmd_solve_koopman(run);
    if (command == "verify") return cmd_verify(run);
    return cmd_demo(run);
}

LogLevel parse_level(const std::string& s) {
    if (s == "quiet") return LogLevel::Quiet;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Normal;
}

int execute(const std::string& command, const Flags& flags) {
    set_log_level(parse_level(flags.log_level));
    Run run;
    run.flags = flags;
    run.quiet = flags.log_level == "quiet";
    if (command == "demo") {
        run.config = demo_config(flags.demo);
    } else {
        if (flags.config.empty()) {
            throw ConfigError(command + " needs --config");
        }
        run.config = load_config(flags.config);
    }
    if (flags.seed) {
        run.config.seed = *flags.seed;
    }
    if (flags.out) {
        run.config.out_dir = *flags.out;
    }

    OutputDir out(run.config.out_dir);
    run.out = &out;
    Stopwatch total;
    int code = kExitOk;
    std::string status = "ok";
    std::string message;
    try {
        code = dispatch(command, run);
    } catch (const CheckFailed& e) {
        code = kExitFailed;
        status = "failed";
        message = e.what();
    } catch (const ResonanceError& e) {
        code = kExitFailed;
        status = "resonance";
        message = e.what();
        run.report["resonance"] = {{"n", e.degree()}, {"j", e.weight()}};
    } catch (const PreconditionError& e) {
        code = kExitFailed;
        status = "refused";
        message = e.what();
    } catch (const std::exception& e) {
        code = kExitError;
        status = "error";
        message = e.what();
    }
    run.timings["total"] = total.seconds();

    json report = {{"command", command},
                   {"name", run.config.name},
                   {"seed", run.config.seed},
                   {"status", status},
                   {"exit_code", code},
                   {"message", message}};
    for (const auto& [key, value] : run.report.items()) {
        report[key] = value;
    }
    report["artifacts"] = out.written();
    report["timings"] = run.timings;
    write_json_file(out.dir() / "report.json", report);
    if (code != kExitOk) {
        std::cerr << "foliate " << command << ": " << message << '\n';
    }
    return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Invariant foliations and Koopman eigenfunctions near a stable fixed point", "foliate"};
    app.require_subcommand(1);
    Flags flags;
    auto common = [&](CLI::App* sub, bool with_config) {
        if (with_config) {
            sub->add_option("--config", flags.config, "TOML run configuration");
        }
        sub->add_flag("--force", flags.force, "proceed past failed nonresonance checks");
        sub->add_option("--seed", flags.seed, "seed for all sampling (overrides the config)");
        sub->add_option("--out", flags.out, "output directory (overrides the config)");
        sub->add_option("--log-level", flags.log_level, "quiet, normal or debug")
            ->check(CLI::IsMember({"quiet", "normal", "debug"}));
    };
    common(app.add_subcommand("check-spectrum", "spectra and nonresonance conditions"), true);
    common(app.add_subcommand("solve-foliation", "jet of the invariant foliation and its certificates"), true);
    common(app.add_subcommand("solve-koopman", "Koopman eigenfunction for an eigenvalue of the generator"), true);
    auto* verify = app.add_subcommand("verify", "re-check written artifacts against the model");
    common(verify, true);
    verify->add_option("--artifact", flags.artifacts, "artifact JSON file (repeatable)");
    auto* demo = app.add_subcommand("demo", "Chafee-Infante or Kolmogorov-flow end-to-end pipeline");
    common(demo, false);
    demo->add_option("name", flags.demo, "chafee-infante or ns-kolmogorov")->required();

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e) == 0 ? kExitOk : kExitError;
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e) == 0 ? kExitOk : kExitError;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return execute(command, flags);
    } catch (const std::exception& e) {
        std::cerr << "foliate " << command << ": " << e.what() << '\n';
        return kExitError;
    }
}

int run_cli(int argc, const char* const* argv) {
    return run_cli(std::vector<std::string>(argv, argv + argc));
}

}  // namespace foliate
