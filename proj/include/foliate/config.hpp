#pragma once

#include "foliate/homological.hpp"
#include "foliate/model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace foliate {

/// One monomial coeff * x^exponents in component `out`.
struct PolyTerm {
    int out = 0;
    double coeff = 0.0;
    Exponent exponents;
};

enum class ModelKind { Map, Flow, ChafeeInfante, NsKolmogorov };

std::string to_string(ModelKind kind);

struct ModelSpec {
    ModelKind kind = ModelKind::Map;
    int dim = 0;
    std::vector<PolyTerm> terms;
    /// Flows only; defaults to default_tau(sigma(G)).
    std::optional<double> tau;
    double ci_lambda = 0.5;
    int modes = 3;
    KolmogorovOptions kolmogorov;
};

struct SplitSpec {
    /// Indices into sigma(A) ordered by decreasing modulus (maps) or decreasing real part (flows).
    std::vector<int> indices;
    std::vector<cplx> values;
    double match_tol = 1e-6;
    double gap_tol = 1e-8;
};

struct SolveSpec {
    /// Empty means the smallest admissible ell.
    std::optional<int> ell;
    int N = 4;
    GMode mode = GMode::Foliation;
    double tol_res = kResonanceTol;
    double target_nonlinearity = 0.1;
    int samples = 256;
    double residual_tol = 1e-9;
};

struct KoopmanSpec {
    /// Empty means the least stable eigenvalue of G.
    std::optional<cplx> lambda;
    int N = 6;
    std::optional<int> ell;
    double domain_tol = 1e-7;
};

struct VerifySpec {
    int n_points = 100;
    double horizon = 5.0;
    int time_samples = 20;
    double tol = 1e-7;
    int grid_points = 256;
};

struct RunConfig {
    std::string name = "run";
    ModelSpec model;
    SplitSpec split;
    SolveSpec solve;
    KoopmanSpec koopman;
    VerifySpec verify;
    std::filesystem::path out_dir = "foliate_out";
    std::uint64_t seed = 0;

    /// Throws ConfigError unless tolerances are positive and N >= ell >= 1.
    void validate() const;
};

/// [model] may be inline or `file = "other.toml"` (relative to the config's directory).
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");

/// Built-in configurations of the two demos.
RunConfig demo_config(const std::string& name);

bool is_flow(const ModelSpec& spec);
MapModel build_map(const ModelSpec& spec);
FlowModel build_flow(const ModelSpec& spec);

}  // namespace foliate
