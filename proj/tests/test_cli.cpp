#include "foliate/cli.hpp"
#include "foliate/config.hpp"
#include "foliate/contour.hpp"
#include "foliate/errors.hpp"
#include "foliate/io.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace foliate;

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("foliate_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "foliate");
    args.push_back("--log-level");
    args.push_back("quiet");
    return run_cli(args);
}

const char* kClosedForm = R"(
[model]
kind = "map"
dim = 2
terms = [
  { out = 0, coeff = 0.5, exponents = [1, 0] },
  { out = 0, coeff = 1.0, exponents = [0, 2] },
  { out = 1, coeff = 0.6, exponents = [0, 1] },
]
[split]
values = [0.5]
[solve]
N = 6
residual_tol = 1e-10
)";

const char* kResonant = R"(
[model]
kind = "map"
dim = 2
terms = [
  { out = 0, coeff = 0.5, exponents = [1, 0] },
  { out = 1, coeff = 0.25, exponents = [0, 1] },
  { out = 1, coeff = 1.0, exponents = [2, 0] },
]
[split]
values = [0.25]
[solve]
ell = 2
N = 4
)";

std::string ode_config(double lambda, double coupling = 1.0, int n_points = 100) {
    std::ostringstream os;
    os << "[model]\nkind = \"flow\"\ndim = 2\nterms = [\n"
       << "  { out = 0, coeff = -1.0, exponents = [1, 0] },\n"
       << "  { out = 1, coeff = -3.0, exponents = [0, 1] },\n"
       << "  { out = 1, coeff = " << coupling << ", exponents = [2, 0] },\n]\n"
       << "[koopman]\nlambda = " << lambda << "\nN = 4\n"
       << "[verify]\nn_points = " << n_points << "\nhorizon = 5.0\ntol = 1e-9\n";
    return os.str();
}

JetMap sample_jet() {
    JetMap jet(2, 3, 3);
    jet[1].coeffs() << 1.0, 0.25, 0.0, -2.0, 1.0 / 3.0, 5e-300;
    jet[2].set_coeff(Exponent{1, 1}, Eigen::Vector3d(0.1, -0.2, 0.3));
    jet[3].set_coeff(Exponent{0, 3}, Eigen::Vector3d(1e-17, 0.0, 7.0));
    return jet;
}

}  // namespace

TEST(Io, JetRoundTripIsExact) {
    const JetMap jet = sample_jet();
    const JetMap back = jet_from_json(json::parse(jet_to_json(jet).dump()));
    ASSERT_EQ(back.order(), 3);
    for (int n = 0; n <= 3; ++n) {
        EXPECT_TRUE(back[n].coeffs() == jet[n].coeffs()) << "degree " << n;
    }
}

TEST(Io, JetOmitsZeroMonomials) {
    const json j = jet_to_json(sample_jet());
    EXPECT_EQ(j["components"][2]["monomials"].size(), 1u);
    EXPECT_EQ(j["components"][0]["monomials"].size(), 0u);
}

TEST(Io, NonFiniteNumbers) {
    EXPECT_EQ(number_to_json(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_TRUE(std::isinf(number_from_json(json("-inf"))));
    EXPECT_TRUE(std::isnan(number_from_json(json("nan"))));
    EXPECT_THROW(number_from_json(json("seven")), ConfigError);
}

TEST(Io, MalformedJetRejected) {
    json j = jet_to_json(sample_jet());
    j["components"][2]["monomials"][0]["exponents"] = {1, 1, 0};
    EXPECT_THROW(jet_from_json(j), ConfigError);
    j = jet_to_json(sample_jet());
    j["components"][1]["monomials"][0]["coeffs"] = {1.0};
    EXPECT_THROW(jet_from_json(j), ConfigError);
    j = jet_to_json(sample_jet());
    j.erase("N");
    EXPECT_THROW(jet_from_json(j), ConfigError);
}

TEST(Io, SemiconjugacyAndFoliationRoundTrip) {
    const RunConfig cfg = parse_config(kClosedForm);
    const MapModel model = build_map(cfg.model);
    const SplitChoice split = make_split_choice(model.A, {0.5});
    const SemiconjugacyJet jet = solve_jet(model, split, 1, 6, GMode::Foliation);
    const FoliationSolution sol = make_foliation_solution(model, jet, select_scaling(model));

    const json j = json::parse(foliation_to_json(sol).dump());
    const FoliationSolution back = foliation_from_json(j, model);
    EXPECT_EQ(foliation_to_json(back).dump(), j.dump());
    EXPECT_TRUE(back.jet.theta == sol.jet.theta);
    EXPECT_TRUE(back.jet.split.T == sol.jet.split.T);
    EXPECT_EQ(back.jet.records.size(), sol.jet.records.size());
    EXPECT_EQ(back.delta, sol.delta);

    const MapModel other = make_polynomial_map(JetMap::linear(Eigen::Matrix3d::Identity() * 0.5, 1));
    EXPECT_THROW(foliation_from_json(j, other), ConfigError);
}

TEST(Config, ParsesEverySection) {
    const RunConfig c = parse_config(R"(
name = "x"
[model]
kind = "chafee_infante"
lambda = 0.25
modes = 4
tau = 0.5
[split]
indices = [0]
[solve]
ell = 3
N = 5
mode = "normal_form"
tol_res = 1e-9
[koopman]
lambda = [-1.0, 2.0]
N = 7
domain_tol = 1e-6
[verify]
n_points = 12
horizon = 2.5
time_samples = 4
tol = 1e-5
[output]
dir = "somewhere"
seed = 9
)",
                                     "/base");
    EXPECT_EQ(c.name, "x");
    EXPECT_EQ(c.model.kind, ModelKind::ChafeeInfante);
    EXPECT_EQ(c.model.modes, 4);
    EXPECT_DOUBLE_EQ(*c.model.tau, 0.5);
    EXPECT_EQ(c.split.indices, std::vector<int>{0});
    EXPECT_EQ(*c.solve.ell, 3);
    EXPECT_EQ(c.solve.mode, GMode::NormalForm);
    EXPECT_EQ(*c.koopman.lambda, cplx(-1.0, 2.0));
    EXPECT_EQ(c.verify.n_points, 12);
    EXPECT_EQ(c.out_dir, fs::path("/base/somewhere"));
    EXPECT_EQ(c.seed, 9u);
}

TEST(Config, ValidationFailures) {
    const std::string model = "[model]\nkind = \"chafee_infante\"\n";
    EXPECT_THROW(parse_config(model + "[solve]\nell = 4\nN = 3\n"), ConfigError);
    EXPECT_THROW(parse_config(model + "[solve]\nell = 0\n"), ConfigError);
    EXPECT_THROW(parse_config(model + "[solve]\ntol_res = -1.0\n"), ConfigError);
    EXPECT_THROW(parse_config(model + "[verify]\ntol = 0.0\n"), ConfigError);
    EXPECT_THROW(parse_config(model + "[solve]\nbogus = 1\n"), ConfigError);
    EXPECT_THROW(parse_config(model + "[koopman]\nlambda = \"smallest\"\n"), ConfigError);
    EXPECT_THROW(parse_config("[model]\nkind = \"map\"\ndim = 2\n"), ConfigError);
    EXPECT_THROW(parse_config("[model\nkind = 1"), ConfigError);
    EXPECT_THROW(parse_config("[split]\nvalues = [0.5]\n"), ConfigError);
    EXPECT_THROW(load_config("/definitely/not/here.toml"), ConfigError);
}

TEST(Config, ModelFromSeparateFile) {
    const fs::path dir = scratch("model_file");
    write_file(dir / "model.toml", "[model]\nkind = \"chafee_infante\"\nmodes = 2\n");
    write_file(dir / "run.toml", "[model]\nfile = \"model.toml\"\n");
    const RunConfig c = load_config(dir / "run.toml");
    EXPECT_EQ(c.model.modes, 2);
}

TEST(Contour, CircleIsOneClosedPolyline) {
    const int n = 61;
    const Eigen::VectorXd axis = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0);
    Eigen::MatrixXd v(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            v(i, j) = axis[i] * axis[i] + axis[j] * axis[j];
        }
    }
    const auto lines = level_set_polylines(axis, axis, v, 0.25);
    ASSERT_EQ(lines.size(), 1u);
    const auto& line = lines.front();
    EXPECT_GT(line.size(), 20u);
    EXPECT_EQ(line.front(), line.back());
    for (const auto& p : line) {
        EXPECT_NEAR(std::hypot(p[0], p[1]), 0.5, 2e-3);
    }
}

TEST(Contour, LinearFieldGivesOneOpenLine) {
    const Eigen::VectorXd axis = Eigen::VectorXd::LinSpaced(11, 0.0, 1.0);
    Eigen::MatrixXd v(11, 11);
    for (int i = 0; i < 11; ++i) {
        v.row(i).setConstant(axis[i]);
    }
    const auto lines = level_set_polylines(axis, axis, v, 0.33);
    ASSERT_EQ(lines.size(), 1u);
    EXPECT_EQ(lines.front().size(), 11u);
    for (const auto& p : lines.front()) {
        EXPECT_NEAR(p[0], 0.33, 1e-14);
    }
}

TEST(Cli, CheckSpectrumExitCodes) {
    const fs::path dir = scratch("check");
    const std::string diag = R"(
[model]
kind = "map"
dim = 2
terms = [{ out = 0, coeff = 0.5, exponents = [1, 0] }, { out = 1, coeff = 0.25, exponents = [0, 1] }]
[split]
values = [0.5]
)";
    EXPECT_EQ(run({"check-spectrum", "--config", write_file(dir / "diag.toml", diag), "--out", dir / "a"}), 0);
    EXPECT_EQ(run({"check-spectrum", "--config", write_file(dir / "res.toml", kResonant), "--out", dir / "b"}), 2);
    const json report = read_json_file(dir / "b" / "report.json");
    EXPECT_EQ(report["status"], "failed");
    const json spec = read_json_file(dir / "b" / "spectrum.json");
    const json& v = spec["map_conditions"]["h4_violations"][0];
    EXPECT_EQ(v["n"], 2);
    EXPECT_EQ(v["j"], 2);
    EXPECT_EQ(run({"check-spectrum", "--config", (dir / "missing.toml").string(), "--out", dir / "c"}), 1);
    EXPECT_EQ(run({"check-spectrum", "--config", write_file(dir / "bad.toml", "[model\n"), "--out", dir / "d"}), 1);
    EXPECT_EQ(run({"check-spectrum"}), 1);
    EXPECT_EQ(run({"no-such-command"}), 1);
}

TEST(Cli, SolveFoliationClosedForm) {
    const fs::path dir = scratch("closed");
    const fs::path cfg = write_file(dir / "cf.toml", kClosedForm);
    ASSERT_EQ(run({"solve-foliation", "--config", cfg, "--out", dir / "o"}), 0);
    const json report = read_json_file(dir / "o" / "report.json");
    EXPECT_LE(report["residual_max_relative"].get<double>(), 1e-10);
    for (const auto& name : report["artifacts"]) {
        EXPECT_TRUE(fs::exists(dir / "o" / name.get<std::string>())) << name;
    }
    const SemiconjugacyJet jet = semiconjugacy_from_json(read_json_file(dir / "o" / "semiconjugacy.json"));
    EXPECT_NEAR(jet.pi[2].coeff(Exponent{0, 2})[0], 1.0 / 0.14, 1e-10);
    EXPECT_NEAR(jet.g[1].coeffs()(0, 0), 0.5, 1e-14);
    EXPECT_FALSE(fs::exists(dir / "o" / ".foliate.lock"));
}

TEST(Cli, LinearModelGivesProjection) {
    const fs::path dir = scratch("linear");
    const fs::path cfg = write_file(dir / "lin.toml", R"(
[model]
kind = "map"
dim = 2
terms = [{ out = 0, coeff = 0.5, exponents = [1, 0] }, { out = 1, coeff = 1.0, exponents = [1, 0] },
         { out = 1, coeff = 0.25, exponents = [0, 1] }]
[split]
values = [0.5]
[solve]
N = 3
)");
    ASSERT_EQ(run({"solve-foliation", "--config", cfg, "--out", dir / "o"}), 0);
    const SemiconjugacyJet jet = semiconjugacy_from_json(read_json_file(dir / "o" / "semiconjugacy.json"));
    const MapModel model = build_map(parse_config(slurp(cfg)).model);
    const Eigen::MatrixXd P0 = make_split_choice(model.A, {0.5}).Tinv.topRows(1);
    EXPECT_LE((jet.pi.linear_part() - P0).norm(), 1e-14);
    EXPECT_LE(jet.pi[2].coeffs().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LE(jet.pi[3].coeffs().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Cli, ForcedResonantSolveReportsDegreeAndWeight) {
    const fs::path dir = scratch("forced");
    const fs::path cfg = write_file(dir / "res.toml", kResonant);
    EXPECT_EQ(run({"solve-foliation", "--config", cfg, "--out", dir / "a"}), 2);
    EXPECT_EQ(read_json_file(dir / "a" / "report.json")["status"], "failed");
    EXPECT_EQ(run({"solve-foliation", "--force", "--config", cfg, "--out", dir / "b"}), 2);
    const json report = read_json_file(dir / "b" / "report.json");
    EXPECT_EQ(report["status"], "resonance");
    EXPECT_EQ(report["resonance"]["n"], 2);
    EXPECT_EQ(report["resonance"]["j"], 2);
}

TEST(Cli, SolveKoopmanAndRefusal) {
    const fs::path dir = scratch("koopman");
    const fs::path good = write_file(dir / "good.toml", ode_config(-1.0));
    ASSERT_EQ(run({"solve-koopman", "--config", good, "--out", dir / "o"}), 0);
    const json j = read_json_file(dir / "o" / "koopman.json");
    const FlowModel flow = build_flow(parse_config(slurp(good)).model);
    const MapModel map = time_tau_map(flow, number_from_json(j["tau"]), 4);
    const KoopmanEigenfunction ef = eigenfunction_from_json(j, map);
    EXPECT_EQ(eigenfunction_to_json(ef).dump(), j.dump());
    const Eigen::RowVectorXcd grad = ef.gradient_at_zero();
    EXPECT_NEAR(std::abs(grad(0) - 1.0), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(grad(1)), 0.0, 1e-9);
    const json report = read_json_file(dir / "o" / "report.json");
    EXPECT_LE(report["eigenfunctions"][0]["defect"]["sup"].get<double>(), 1e-9);

    const fs::path bad = write_file(dir / "bad.toml", ode_config(-2.0));
    EXPECT_EQ(run({"solve-koopman", "--config", bad, "--out", dir / "r"}), 2);
    const json refusal = read_json_file(dir / "r" / "report.json");
    EXPECT_EQ(refusal["refusal"]["reason"], "not an eigenvalue of G");
    EXPECT_EQ(refusal["artifacts"].size(), 0u);
}

TEST(Cli, VerifyFreshWrongAndEmpty) {
    const fs::path dir = scratch("verify");
    const fs::path good = write_file(dir / "good.toml", ode_config(-1.0));
    ASSERT_EQ(run({"solve-koopman", "--config", good, "--out", dir / "o"}), 0);
    const std::string artifact = (dir / "o" / "koopman.json").string();
    EXPECT_EQ(run({"verify", "--config", good, "--artifact", artifact, "--out", dir / "v1"}), 0);

    // lambda = -1 for the wrong model as well, so the artifact is compared against a flow whose
    // x-direction decays at rate -1.5.
    std::string wrong = ode_config(-1.0);
    wrong.replace(wrong.find("coeff = -1.0"), 12, "coeff = -1.5");
    EXPECT_EQ(run({"verify", "--config", write_file(dir / "wrong.toml", wrong), "--artifact", artifact, "--out",
                   dir / "v2"}),
              2);
    const json r = read_json_file(dir / "v2" / "report.json");
    EXPECT_GT(r["verified"][0]["defect"]["sup"].get<double>(), 1e-3);

    const fs::path empty = write_file(dir / "empty.toml", ode_config(-1.0, 1.0, 0));
    EXPECT_EQ(run({"verify", "--config", empty, "--artifact", artifact, "--out", dir / "v3"}), 1);
    EXPECT_EQ(run({"verify", "--config", good, "--out", dir / "v4"}), 1);
    EXPECT_EQ(run({"verify", "--config", good, "--artifact", (dir / "none.json").string(), "--out", dir / "v5"}), 1);
}

TEST(Cli, VerifyFoliationAgainstWrongModel) {
    const fs::path dir = scratch("verify_foliation");
    const fs::path cfg = write_file(dir / "cf.toml", kClosedForm);
    ASSERT_EQ(run({"solve-foliation", "--config", cfg, "--out", dir / "o"}), 0);
    const std::string artifact = (dir / "o" / "foliation.json").string();
    EXPECT_EQ(run({"verify", "--config", cfg, "--artifact", artifact, "--out", dir / "v1"}), 0);
    std::string wrong = kClosedForm;
    wrong.replace(wrong.find("coeff = 1.0"), 11, "coeff = 2.0");
    EXPECT_EQ(run({"verify", "--config", write_file(dir / "wrong.toml", wrong), "--artifact", artifact, "--out",
                   dir / "v2"}),
              2);
}

TEST(Cli, ArtifactsAreDeterministic) {
    const fs::path dir = scratch("determinism");
    const fs::path cfg = write_file(dir / "k.toml", ode_config(-1.0));
    ASSERT_EQ(run({"solve-koopman", "--config", cfg, "--seed", "3", "--out", dir / "a"}), 0);
    ASSERT_EQ(run({"solve-koopman", "--config", cfg, "--seed", "3", "--out", dir / "b"}), 0);
    for (const char* name : {"koopman.json", "defects.csv", "level_sets.csv"}) {
        EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
    }
    json ra = read_json_file(dir / "a" / "report.json");
    json rb = read_json_file(dir / "b" / "report.json");
    ra.erase("timings");
    rb.erase("timings");
    EXPECT_EQ(ra.dump(), rb.dump());
    EXPECT_EQ(ra["seed"], 3);

    const fs::path fcfg = write_file(dir / "cf.toml", kClosedForm);
    ASSERT_EQ(run({"solve-foliation", "--config", fcfg, "--out", dir / "c"}), 0);
    ASSERT_EQ(run({"solve-foliation", "--config", fcfg, "--out", dir / "d"}), 0);
    EXPECT_EQ(slurp(dir / "c" / "foliation.json"), slurp(dir / "d" / "foliation.json"));
}

TEST(Cli, LockFileRejectsSecondWriter) {
    const fs::path dir = scratch("lock");
    fs::create_directories(dir / "o");
    write_file(dir / "o" / ".foliate.lock", "1\n");
    const fs::path cfg = write_file(dir / "cf.toml", kClosedForm);
    EXPECT_EQ(run({"solve-foliation", "--config", cfg, "--out", dir / "o"}), 1);
    EXPECT_FALSE(fs::exists(dir / "o" / "report.json"));
    fs::remove(dir / "o" / ".foliate.lock");
    EXPECT_EQ(run({"solve-foliation", "--config", cfg, "--out", dir / "o"}), 0);
}

TEST(Cli, UnknownDemo) { EXPECT_EQ(run({"demo", "navier"}), 1); }
