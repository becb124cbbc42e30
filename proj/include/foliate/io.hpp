#pragma once

#include "foliate/homological.hpp"
#include "foliate/koopman.hpp"
#include "foliate/remainder.hpp"
#include "foliate/spectral.hpp"
#include "foliate/tensor_poly.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace foliate {

using json = nlohmann::ordered_json;

/// Doubles are written with round-trip precision; non-finite values as "inf", "-inf", "nan".
json number_to_json(double v);
double number_from_json(const json& j);

json complex_to_json(cplx z);
cplx complex_from_json(const json& j);
json spectrum_to_json(const Spectrum& s);
Spectrum spectrum_from_json(const json& j);
json matrix_to_json(const Eigen::MatrixXd& M);
Eigen::MatrixXd matrix_from_json(const json& j);

/// {"in_dim", "out_dim", "N", "components": [{"degree", "monomials": [{"exponents", "coeffs"}]}]}.
/// Monomials follow the graded-lex table order; all-zero monomials are omitted.
json jet_to_json(const JetMap& jet);
JetMap jet_from_json(const json& j);

json split_to_json(const SplitChoice& split);
SplitChoice split_from_json(const json& j);

json spectrum_report_to_json(const SpectrumReport& r);
json resonance_report_to_json(const ResonanceReport& r);
json admissibility_to_json(const AdmissibilityReport& r);
json certificate_to_json(const ScalingCertificate& c);
ScalingCertificate certificate_from_json(const json& j);
json defect_to_json(const DefectStats& d);

/// Jet schema for pi and g plus a metadata header (ell, N, mode, split, per-degree records).
json semiconjugacy_to_json(const SemiconjugacyJet& jet);
SemiconjugacyJet semiconjugacy_from_json(const json& j);

json foliation_to_json(const FoliationSolution& sol);
/// The model is not serialized; the caller supplies it (with the same dimension).
FoliationSolution foliation_from_json(const json& j, const MapModel& model);

json eigenfunction_to_json(const KoopmanEigenfunction& ef);
KoopmanEigenfunction eigenfunction_from_json(const json& j, const MapModel& model);

/// Pretty-printed with a trailing newline; throws ConfigError on I/O failure.
void write_json_file(const std::filesystem::path& path, const json& j);
json read_json_file(const std::filesystem::path& path);

/// Rows of already formatted cells; cells are written as given.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
std::string csv_number(double v);

}  // namespace foliate
