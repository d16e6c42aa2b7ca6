#include "ratectl/io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <set>

namespace ratectl {

namespace {

const Json& require(const Json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw InvalidInput(std::string("missing field \"") + key + "\"");
    return *it;
}

double as_number(const Json& j, const std::string& what) {
    if (!j.is_number()) throw InvalidInput(what + " must be a number");
    return j.get<double>();
}

Vector as_vector(const Json& j, const std::string& what) {
    if (!j.is_array()) throw InvalidInput(what + " must be an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = as_number(j[i], what + " entry");
    return v;
}

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
    if (!j.is_object()) throw InvalidInput(std::string(what) + " must be a JSON object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items())
        if (!ok.count(key)) throw InvalidInput(std::string(what) + ": unknown field \"" + key + "\"");
}

// JSON has no infinities.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

Json parse_json(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw InvalidInput(std::string("malformed JSON: ") + e.what());
    }
}

ModelSpec model_from_json(const Json& j) {
    reject_unknown(j, {"R", "p", "q", "beta", "name"}, "model");
    const Json& rows = require(j, "R");
    if (!rows.is_array() || rows.empty()) throw InvalidInput("R must be a non-empty array of rows");
    const auto K = static_cast<Eigen::Index>(rows.size());
    ModelSpec spec;
    spec.R.resize(K, K);
    for (Eigen::Index i = 0; i < K; ++i) {
        const Vector row = as_vector(rows[static_cast<std::size_t>(i)], "R row");
        if (row.size() != K) throw InvalidInput("R must be square");
        spec.R.row(i) = row.transpose();
    }
    spec.p = j.contains("p") ? as_vector(j["p"], "p") : Vector::Ones(K);
    spec.q = j.contains("q") ? as_vector(j["q"], "q") : Vector::Ones(K);
    spec.beta = j.contains("beta") ? as_number(j["beta"], "beta") : 1.0;
    return spec;
}

Json model_to_json(const ModelSpec& spec) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < spec.R.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < spec.R.cols(); ++k) row.push_back(spec.R(i, k));
        rows.push_back(std::move(row));
    }
    return {{"R", rows}, {"p", to_json(spec.p)}, {"q", to_json(spec.q)}, {"beta", spec.beta}};
}

KineticsSpec kinetics_from_json(const Json& j) {
    reject_unknown(j, {"mu", "gamma", "period_days"}, "kinetics spec");
    KineticsSpec spec;
    spec.mu_rate = as_number(require(j, "mu"), "mu");
    spec.gamma_rate = as_number(require(j, "gamma"), "gamma");
    if (j.contains("period_days")) spec.period_days = as_number(j["period_days"], "period_days");
    validate(spec);
    return spec;
}

OffspringModel offspring_from_json(const Json& j, const Matrix& mean) {
    reject_unknown(j, {"kind", "tables"}, "offspring config");
    const Json& kind = require(j, "kind");
    if (!kind.is_string()) throw InvalidInput("offspring kind must be a string");
    const auto name = kind.get<std::string>();
    if (name == "poisson") return OffspringModel::poisson(mean);
    if (name == "deterministic-rounding") return OffspringModel::deterministic_rounding(mean);
    if (name != "custom-table") throw InvalidInput("unknown offspring kind \"" + name + "\"");

    const Json& tables = require(j, "tables");
    if (!tables.is_array()) throw InvalidInput("offspring tables must be an array");
    std::vector<std::vector<OffspringOutcome>> parsed;
    for (const auto& table : tables) {
        if (!table.is_array()) throw InvalidInput("each offspring table must be an array");
        auto& out = parsed.emplace_back();
        for (const auto& entry : table) {
            reject_unknown(entry, {"v", "p"}, "offspring outcome");
            OffspringOutcome o;
            const Json& v = require(entry, "v");
            if (!v.is_array()) throw InvalidInput("offspring outcome v must be an array");
            for (const auto& c : v) {
                if (!c.is_number_integer()) throw InvalidInput("offspring counts must be integers");
                o.v.push_back(c.get<std::int64_t>());
            }
            o.p = as_number(require(entry, "p"), "offspring probability");
            out.push_back(std::move(o));
        }
    }
    auto model = OffspringModel::custom_table(std::move(parsed));
    if (static_cast<Eigen::Index>(model.dim()) != mean.rows())
        throw InvalidInput("offspring tables do not match the model dimension");
    return model;
}

Json to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
    return a;
}

Json solution_to_json(const FixedPointSolution& sol, const ResidualReport& check) {
    return {
        {"method", std::string(to_string(sol.method))},
        {"x_star", to_json(sol.x_star.values())},
        {"s_star", to_json(sol.s_star.values())},
        {"kappa_star", number(sol.kappa_star)},
        {"alpha_star", number(sol.alpha_star)},
        {"residual_fixed_point", number(sol.residual_fixed_point)},
        {"residual_feasibility", number(sol.residual_feasibility)},
        {"degenerate", sol.degenerate},
        {"verification",
         {{"passed", check.passed},
          {"kappa_mismatch", number(check.kappa_mismatch)},
          {"rollout_max_rel_error", number(check.rollout_max_rel_error)}}},
    };
}

Json report_to_json(const MonteCarloReport& rep, const MonteCarloConfig& cfg) {
    Json z0 = Json::array();
    for (auto z : cfg.z0) z0.push_back(z);
    return {
        {"runs", rep.runs},
        {"extinction_count", rep.extinction_count},
        {"overflow_count", rep.overflow_count},
        {"extinction_probability", rep.extinction_probability},
        {"extinction_half_width", rep.half_width},
        {"conditional_alpha",
         {{"count", rep.conditional_count},
          {"mean", rep.conditional_count ? number(rep.conditional_alpha_mean) : Json(nullptr)},
          {"std", rep.conditional_count ? number(rep.conditional_alpha_std) : Json(nullptr)}}},
        {"seed", rep.seed},
        {"config", {{"runs", cfg.runs}, {"horizon", cfg.horizon}, {"z0", z0}, {"base_seed", cfg.base_seed}}},
    };
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    const Eigen::Index K = rows.empty() ? 0 : rows.front().x_star.size();
    os << "beta,kappa_opt,kappa_uniform,gain";
    for (Eigen::Index i = 1; i <= K; ++i) os << ",x_star_" << i;
    for (Eigen::Index i = 1; i <= K; ++i) os << ",s_star_" << i;
    os << '\n';
    for (const auto& r : rows) {
        os << format_double(r.beta) << ',' << format_double(r.kappa_opt) << ',' << format_double(r.kappa_uniform)
           << ',' << format_double(r.gain);
        for (Eigen::Index i = 0; i < K; ++i) os << ',' << format_double(r.x_star[i]);
        for (Eigen::Index i = 0; i < K; ++i) os << ',' << format_double(r.s_star[i]);
        os << '\n';
    }
}

}  // namespace ratectl
