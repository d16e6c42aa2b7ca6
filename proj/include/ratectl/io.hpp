#pragma once

// JSON and CSV formats shared by the C API and the tests.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ratectl/core.hpp"
#include "ratectl/kinetics.hpp"
#include "ratectl/optimizer.hpp"
#include "ratectl/stochastic.hpp"

namespace ratectl {

using Json = nlohmann::json;

/// Locale-independent, 17 significant digits; "inf", "-inf", "nan" for
/// non-finite values.
std::string format_double(double v);

/// Throws InvalidInput on malformed text.
Json parse_json(const std::string& text);

/// {"R": [[...]], "p": [...], "q": [...], "beta": b}; p, q default to ones
/// and beta to 1. Unknown keys are rejected.
ModelSpec model_from_json(const Json& j);
Json model_to_json(const ModelSpec& spec);

/// {"mu": .., "gamma": .., "period_days": ..}; the period defaults to 21.
KineticsSpec kinetics_from_json(const Json& j);

/// {"kind": "poisson" | "deterministic-rounding"} uses `mean` for the means;
/// {"kind": "custom-table", "tables": [[{"v": [...], "p": ..}, ...], ...]}.
OffspringModel offspring_from_json(const Json& j, const Matrix& mean);

Json to_json(const Vector& v);
Json solution_to_json(const FixedPointSolution& sol, const ResidualReport& check);
Json report_to_json(const MonteCarloReport& rep, const MonteCarloConfig& cfg);

/// Columns beta, kappa_opt, kappa_uniform, gain, x_star_1..K, s_star_1..K.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace ratectl
