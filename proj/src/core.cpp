#include "ratectl/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ratectl {

namespace {

bool all_finite(const Eigen::Ref<const Matrix>& a) { return a.allFinite(); }

std::string entry_name(Eigen::Index i, Eigen::Index j) {
    std::ostringstream os;
    os << "R entry (" << i + 1 << "," << j + 1 << ")";
    return os.str();
}

void require_same_dim(const Vector& a, const Vector& b, const char* what) {
    if (a.size() != b.size()) {
        throw InvalidInput(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                           " vs " + std::to_string(b.size()) + ")");
    }
}

}  // namespace

std::vector<Violation> validate_model(const ModelSpec& spec) {
    std::vector<Violation> out;
    const auto K = spec.R.rows();
    if (spec.R.rows() != spec.R.cols()) {
        out.push_back({"R", "matrix is not square"});
        return out;
    }
    if (K < 2) out.push_back({"R", "dimension K must be at least 2"});
    if (!all_finite(spec.R)) out.push_back({"R", "entries must be finite"});
    for (Eigen::Index i = 0; i < K; ++i)
        for (Eigen::Index j = 0; j < spec.R.cols(); ++j)
            if (!(spec.R(i, j) > 0.0)) out.push_back({"R", entry_name(i, j) + " not strictly positive"});

    auto check_vector = [&](const Vector& v, const char* name) {
        if (v.size() != K) {
            out.push_back({name, "length " + std::to_string(v.size()) + " does not match K=" + std::to_string(K)});
            return;
        }
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v[i]) || !(v[i] > 0.0))
                out.push_back({name, std::string(name) + " entry " + std::to_string(i + 1) + " not strictly positive"});
        }
    };
    check_vector(spec.p, "p");
    check_vector(spec.q, "q");
    if (!(spec.beta > 0.0 && spec.beta <= 1.0)) out.push_back({"beta", "beta outside (0,1]"});
    return out;
}

CanonicalModel::CanonicalModel(Matrix r_prime, Vector p_prime) : r_(std::move(r_prime)), p_(std::move(p_prime)) {
    if (r_.rows() != r_.cols()) throw InvalidInput("canonical R' must be square");
    if (r_.rows() < 2) throw InvalidInput("canonical model needs K >= 2");
    if (p_.size() != r_.rows()) throw InvalidInput("canonical p' dimension does not match R'");
    if (!r_.allFinite() || (r_.array() <= 0.0).any()) throw InvalidInput("canonical R' must be strictly positive");
    if (!p_.allFinite() || (p_.array() <= 0.0).any()) throw InvalidInput("canonical p' must be strictly positive");
}

bool CanonicalModel::symmetric_revenue(double rel_tol) const {
    const double lo = p_.minCoeff();
    const double hi = p_.maxCoeff();
    return hi - lo <= rel_tol * hi;
}

CanonicalModel canonicalize(const ModelSpec& spec) {
    const auto violations = validate_model(spec);
    if (!violations.empty()) {
        std::string msg = "invalid model:";
        for (const auto& v : violations) msg += " [" + v.field + ": " + v.reason + "]";
        throw InvalidInput(msg);
    }
    const auto K = spec.R.rows();
    Matrix r(K, K);
    for (Eigen::Index i = 0; i < K; ++i)
        for (Eigen::Index j = 0; j < K; ++j) r(i, j) = spec.q[i] * spec.R(i, j) / spec.q[j];
    Vector p = (spec.beta * spec.p.array() / spec.q.array()).matrix();
    return CanonicalModel(std::move(r), std::move(p));
}

Mixture::Mixture(Vector x) : x_(std::move(x)) {
    if (x_.size() == 0) throw InvalidInput("mixture must be non-empty");
    if (!x_.allFinite() || (x_.array() < 0.0).any()) throw InvalidInput("mixture has a negative or non-finite coordinate");
    if (std::abs(x_.sum() - 1.0) > kSumTolerance) throw InvalidInput("mixture coordinates do not sum to 1");
}

double l1_norm(const Vector& w) { return w.sum(); }

double weighted_norm(const Vector& w, const Vector& weights) {
    require_same_dim(w, weights, "weighted_norm");
    return w.dot(weights);
}

Mixture normalize(const Vector& w) {
    const double n = l1_norm(w);
    if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateInput("cannot scale a zero population onto the simplex");
    return Mixture(w / n);
}

double feasibility_tolerance(const Vector& w) { return 1e-9 * (1.0 + l1_norm(w)); }

bool real_feasible(const Vector& w, const Vector& s, const CanonicalModel& m) {
    require_same_dim(w, s, "real_feasible");
    require_same_dim(w, m.p(), "real_feasible");
    const double tol = feasibility_tolerance(w);
    if ((s.array() < -tol).any()) return false;
    if (((s - w).array() > tol).any()) return false;
    return l1_norm(s) <= weighted_norm(w, m.p()) + tol;
}

double facet_budget(const Vector& w, const CanonicalModel& m) {
    const double total = l1_norm(w);
    if (!(total > 0.0)) throw DegenerateInput("facet budget of a zero population");
    return std::min(weighted_norm(w, m.p()), total);
}

Vector sim_action_bounds(const Mixture& x, const CanonicalModel& m) {
    return x.values() / facet_budget(x.values(), m);
}

double sim_violation(const Mixture& x, const Vector& s, const CanonicalModel& m) {
    require_same_dim(x.values(), s, "sim_violation");
    const Vector bounds = sim_action_bounds(x, m);
    double worst = std::abs(s.sum() - 1.0);
    worst = std::max(worst, (-s).maxCoeff());
    worst = std::max(worst, (s - bounds).maxCoeff());
    return std::max(worst, 0.0);
}

double reward_real(const Vector& w, const Vector& s, const CanonicalModel& m) {
    const double wn = l1_norm(w);
    if (!(wn > 0.0)) throw DegenerateInput("reward of a zero population");
    const double next = l1_norm(m.R() * s);
    if (!(next > 0.0)) return -std::numeric_limits<double>::infinity();
    return std::log(next / wn);
}

double reward_sim(const Mixture& x, const Vector& s, const CanonicalModel& m) {
    if (sim_violation(x, s, m) > 1e-9) throw InfeasibleAction("SIM action outside phi^S(x)");
    const double next = l1_norm(m.R() * s);
    return std::log(next) + std::log(std::min(weighted_norm(x.values(), m.p()), 1.0));
}

PerronPair spectral_radius(const Matrix& R, std::size_t max_iterations) {
    if (R.rows() != R.cols() || R.rows() == 0) throw InvalidInput("spectral_radius: matrix must be square");
    if (!R.allFinite() || (R.array() <= 0.0).any())
        throw InvalidInput("spectral_radius: matrix must be strictly positive");

    const auto K = R.rows();
    Vector v = Vector::Constant(K, 1.0 / static_cast<double>(K));
    double rho = 0.0;
    for (std::size_t it = 1; it <= max_iterations; ++it) {
        Vector y = R * v;
        const double next_rho = y.sum();  // ||Rv|| with ||v|| = 1
        y /= next_rho;
        const double dv = (y - v).cwiseAbs().sum();
        const bool settled = std::abs(next_rho - rho) <= 1e-12 * next_rho && dv <= 1e-12;
        v = std::move(y);
        rho = next_rho;
        if (settled) return {rho, normalize(v).values(), it};
    }
    throw NumericalFailure("power iteration did not converge");
}

void for_each_lattice_point(std::size_t K, std::uint32_t m,
                            const std::function<void(std::span<const std::uint32_t>)>& visit) {
    if (K == 0) return;
    std::vector<std::uint32_t> v(K, 0);
    auto rec = [&](auto&& self, std::size_t pos, std::uint32_t remaining) -> void {
        if (pos + 1 == K) {
            v[pos] = remaining;
            visit(v);
            return;
        }
        for (std::uint32_t u = 0; u <= remaining; ++u) {
            v[pos] = u;
            self(self, pos + 1, remaining - u);
        }
    };
    rec(rec, 0, m);
}

std::uint64_t lattice_size(std::size_t K, std::uint64_t m) {
    if (K == 0) return 0;
    unsigned __int128 result = 1;
    for (std::uint64_t i = 1; i < K; ++i) {
        result = result * (m + i) / i;
        if (result > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
    }
    return static_cast<std::uint64_t>(result);
}

}  // namespace ratectl
