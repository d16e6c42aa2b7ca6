#include "ratectl/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "ratectl/detproc.hpp"
#include "lp.hpp"

namespace ratectl {

namespace {

// Slack on the phi^S box constraints for search candidates. Far below the
// 1e-8 acceptance threshold on residual_feasibility.
constexpr double kSearchSlack = 1e-12;
constexpr double kRefineFloor = 1e-10;
constexpr std::size_t kRefineEvaluationCap = 5'000'000;

struct Candidate {
    Vector s;
    Vector x;
    double growth = -1.0;
};

// Growth factor of the fixed point generated by direction s, or a negative
// value when s is not admissible at x = normalize(R's).
double evaluate_direction(const CanonicalModel& m, const Vector& s, Vector& x_out) {
    const Vector y = m.R() * s;
    const double n = y.sum();
    x_out = y / n;
    const double budget = std::min(x_out.dot(m.p()), 1.0);
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > x_out[i] / budget + kSearchSlack) return -1.0;
    return budget * n;
}

// The optimal growth factor is the largest kappa for which the polytope
//   L(kappa) = {s in simplex : R's >= kappa s, <p', R's> >= kappa}
// is nonempty (a point of L(kappa) sustains growth kappa in the real-valued
// process, and the optimal fixed point lies in L(kappa*)). Bisect on kappa with
// an LP feasibility test, then pick a point of the top level set.
std::optional<Vector> level_set_direction(const CanonicalModel& m) {
    const auto K = static_cast<Eigen::Index>(m.dim());
    const Matrix& R = m.R();
    const Vector budget_row = R.transpose() * m.p();
    auto system = [&](double kappa, Matrix& A, Vector& b) {
        A = Matrix::Zero(K + 2, 2 * K + 1);
        b = Vector::Zero(K + 2);
        A.topLeftCorner(K, K) = kappa * Matrix::Identity(K, K) - R;
        A.block(0, K, K, K).setIdentity();
        A.block(K, 0, 1, K) = budget_row.transpose();
        A(K, 2 * K) = -1.0;
        b[K] = kappa;
        A.block(K + 1, 0, 1, K).setOnes();
        b[K + 1] = 1.0;
    };
    auto solve_at = [&](double kappa, const Vector& cost_s) {
        Matrix A;
        Vector b;
        system(kappa, A, b);
        Vector c = Vector::Zero(2 * K + 1);
        c.head(K) = cost_s;
        return lp::minimize(A, b, c);
    };

    const Vector zero = Vector::Zero(K);
    double lo = 0.0, hi = R.colwise().sum().maxCoeff() * (1.0 + 1e-12);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (solve_at(mid, zero) ? lo : hi) = mid;
    }
    // The top level set is often a single point, where LP feasibility is
    // decided by rounding; back off from kappa* until a clean point appears.
    // Within the level set prefer points whose growth factor is pinned to
    // kappa: minimise ||R's||_p' first, then ||R's||.
    for (double backoff : {0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8}) {
        for (const Vector& cost : {budget_row, Vector(R.colwise().sum().transpose())}) {
            const auto sol = solve_at(lo * (1.0 - backoff), cost);
            if (!sol) continue;
            Vector s = sol->x.head(K).cwiseMax(0.0);
            if (!(s.sum() > 0.0)) continue;
            s /= s.sum();
            const Mixture x = normalize(R * s);
            if (sim_violation(x, s, m) <= 1e-9) return s;
        }
    }
    return std::nullopt;
}

std::array<double, 2> quadratic_roots(double a, double b, double c) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return {nan, nan};
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    if (q == 0.0) return {0.0, 0.0};
    return {q / a, c / q};
}

}  // namespace

std::string_view to_string(SolveMethod method) {
    switch (method) {
        case SolveMethod::K2ClosedForm: return "k2-closed-form";
        case SolveMethod::GridRefine: return "grid-refine";
        case SolveMethod::MdpOracle: return "mdp-oracle";
    }
    return "unknown";
}

FixedPointSolution make_solution(const Mixture& x, const Mixture& s, const CanonicalModel& m, SolveMethod method) {
    const Vector next = m.R() * s.values();
    const double kappa = facet_budget(x.values(), m) * next.sum();
    FixedPointSolution sol{x, s};
    sol.kappa_star = kappa;
    sol.alpha_star = std::log(kappa);
    sol.residual_fixed_point = (normalize(next).values() - x.values()).cwiseAbs().sum();
    sol.residual_feasibility = sim_violation(x, s.values(), m);
    sol.method = method;
    return sol;
}

FixedPointSolution perron_solution(const CanonicalModel& m, SolveMethod method) {
    const auto perron = spectral_radius(m.R());
    const Mixture v(perron.vector);
    return make_solution(v, v, m, method);
}

FixedPointSolution solve_k2(const CanonicalModel& m) {
    if (m.dim() != 2) throw UnsupportedInstance("closed form needs K = 2; use solve_general");
    if (!m.symmetric_revenue()) throw UnsupportedInstance("closed form needs symmetric revenue p'; use solve_general");

    const double beta = m.p()[0];
    if (beta >= 1.0) return perron_solution(m, SolveMethod::K2ClosedForm);

    const Vector sums = m.column_sums();
    const bool swapped = sums[1] > sums[0];
    Matrix r = m.R();
    if (swapped) {
        r.row(0).swap(r.row(1));
        r.col(0).swap(r.col(1));
    }
    const double a = r(0, 0), b = r(0, 1), c = r(1, 0), d = r(1, 1);
    const double c1 = a + c, c2 = b + d;

    if (c1 - c2 <= 1e-12 * c1) {
        // Equal column sums: every admissible direction has the same growth.
        auto sol = perron_solution(m, SolveMethod::K2ClosedForm);
        sol.degenerate = true;
        return sol;
    }
    const bool proportional = std::abs(a * d - b * c) <= 1e-12 * (a * d + b * c);

    double x1 = 0.0;
    double s1 = 1.0;
    if (beta <= a / c1) {
        // All of the budget goes to the dominant type.
        x1 = a / c1;
    } else {
        // s1 = x1/beta substituted into x = normalize(R's):
        //   (c1 - c2) x1^2 + (beta c2 - (a - b)) x1 - beta b = 0
        const auto roots = quadratic_roots(c1 - c2, beta * c2 - (a - b), -beta * b);
        double best_kappa = -1.0;
        for (double root : roots) {
            if (!(root >= -1e-15 && root <= std::min(1.0, beta) + 1e-15)) continue;
            const double kappa = beta * c2 + (c1 - c2) * root;
            if (kappa > best_kappa || (kappa == best_kappa && root > x1)) {
                best_kappa = kappa;
                x1 = root;
            }
        }
        if (best_kappa < 0.0) throw NumericalFailure("closed form: no admissible root of the fixed-point quadratic");
        x1 = std::clamp(x1, 0.0, 1.0);
        s1 = std::min(x1 / beta, 1.0);
    }

    Vector x(2), s(2);
    x << x1, 1.0 - x1;
    s << s1, 1.0 - s1;
    if (swapped) {
        std::swap(x[0], x[1]);
        std::swap(s[0], s[1]);
    }
    auto sol = make_solution(Mixture(x), Mixture(s), m, SolveMethod::K2ClosedForm);
    sol.degenerate = proportional;
    return sol;
}

FixedPointSolution solve_general(const CanonicalModel& m, std::size_t resolution) {
    if (resolution < 1) throw InvalidInput("solve_general: resolution must be positive");
    if (resolution > std::numeric_limits<std::uint32_t>::max()) throw InvalidInput("solve_general: resolution too large");
    if ((m.p().array() >= 1.0).all()) return perron_solution(m, SolveMethod::GridRefine);

    const std::size_t K = m.dim();
    const auto denom = static_cast<double>(resolution);
    Candidate best;
    Vector s(static_cast<Eigen::Index>(K));
    Vector x;
    for_each_lattice_point(K, static_cast<std::uint32_t>(resolution), [&](std::span<const std::uint32_t> v) {
        for (std::size_t i = 0; i < K; ++i) s[static_cast<Eigen::Index>(i)] = v[i] / denom;
        const double g = evaluate_direction(m, s, x);
        if (g > best.growth) best = {s, x, g};
    });
    {
        // The Perron direction is always admissible (s = x, facet budget <= 1).
        const auto perron = spectral_radius(m.R());
        const double g = evaluate_direction(m, perron.vector, x);
        if (g > best.growth) best = {perron.vector, x, g};
    }
    if (best.growth <= 0.0) throw NumericalFailure("solve_general: no admissible direction found");

    // Projected pairwise coordinate ascent: move mass from coordinate j to i.
    double step = 1.0 / denom;
    std::size_t evaluations = 0;
    Vector trial(static_cast<Eigen::Index>(K));
    while (step >= kRefineFloor && evaluations < kRefineEvaluationCap) {
        Candidate improved = best;
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(K); ++i) {
            for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(K); ++j) {
                if (i == j) continue;
                const double amount = std::min(step, best.s[j]);
                if (!(amount > 0.0)) continue;
                trial = best.s;
                trial[i] += amount;
                trial[j] -= amount;
                ++evaluations;
                const double g = evaluate_direction(m, trial, x);
                if (g > improved.growth) improved = {trial, x, g};
            }
        }
        if (improved.growth > best.growth) {
            best = std::move(improved);
        } else {
            step *= 0.5;
        }
    }

    if (const auto s = level_set_direction(m)) {
        const Vector y = m.R() * *s;
        const double g = facet_budget(y / y.sum(), m) * y.sum();
        if (g > best.growth) best = {*s, y / y.sum(), g};
    }

    const Mixture s_star(best.s);
    const Mixture x_star = normalize(m.R() * best.s);
    return make_solution(x_star, s_star, m, SolveMethod::GridRefine);
}

FixedPointSolution solve(const CanonicalModel& m, std::size_t resolution) {
    if (m.dim() == 2 && m.symmetric_revenue()) return solve_k2(m);
    return solve_general(m, resolution);
}

ResidualReport verify_fixed_point(const FixedPointSolution& sol, const CanonicalModel& m) {
    ResidualReport rep;
    const Vector next = m.R() * sol.s_star.values();
    rep.residual_fixed_point = (normalize(next).values() - sol.x_star.values()).cwiseAbs().sum();
    rep.residual_feasibility = sim_violation(sol.x_star, sol.s_star.values(), m);
    rep.kappa_mismatch = std::abs(sol.kappa_star - facet_budget(sol.x_star.values(), m) * next.sum());

    try {
        const auto policy = mixture_policy(sol.x_star, sol.s_star, m);
        const auto traj = rollout(policy, sol.x_star.values(), 10, m);
        const double log_kappa = std::log(sol.kappa_star);
        double worst = 0.0;
        for (std::size_t t = 0; t <= traj.horizon; ++t) {
            const double rel = std::expm1(traj.log_norms[t] - static_cast<double>(t) * log_kappa);
            worst = std::max(worst, std::abs(rel));
        }
        rep.rollout_max_rel_error = worst;
        rep.rollout_ok = worst <= 1e-8;
    } catch (const Error&) {
        rep.rollout_max_rel_error = std::numeric_limits<double>::infinity();
        rep.rollout_ok = false;
    }
    rep.passed = rep.residual_fixed_point <= 1e-8 && rep.residual_feasibility <= 1e-8 &&
                 rep.kappa_mismatch <= 1e-10 * std::max(1.0, sol.kappa_star) && rep.rollout_ok;
    return rep;
}

double uniform_growth_factor(const CanonicalModel& m) {
    if (!m.symmetric_revenue()) throw UnsupportedInstance("uniform baseline needs symmetric revenue p'");
    return std::min(1.0, m.p()[0]) * spectral_radius(m.R()).rho;
}

double growth_factor_at(const ModelSpec& tmpl, double beta, ThresholdSolver solver, std::size_t resolution) {
    ModelSpec spec = tmpl;
    spec.beta = beta;
    const auto m = canonicalize(spec);
    return solver == ThresholdSolver::Optimal ? solve(m, resolution).kappa_star : uniform_growth_factor(m);
}

std::optional<double> beta_threshold(const ModelSpec& tmpl, double target, ThresholdSolver solver,
                                     std::size_t resolution) {
    if (!(target > 0.0) || !std::isfinite(target)) throw InvalidInput("threshold target must be positive and finite");
    if (growth_factor_at(tmpl, 1.0, solver, resolution) < target) return std::nullopt;
    // kappa(beta) is nondecreasing and tends to 0 with beta.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (growth_factor_at(tmpl, mid, solver, resolution) >= target)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

std::vector<SweepRow> sweep(const ModelSpec& tmpl, double beta_min, double beta_max, std::size_t steps,
                            std::size_t resolution) {
    if (!(beta_min > 0.0 && beta_min < beta_max && beta_max <= 1.0))
        throw InvalidInput("sweep range must satisfy 0 < beta_min < beta_max <= 1");
    if (steps < 2) throw InvalidInput("sweep needs at least 2 steps");

    std::vector<SweepRow> rows;
    rows.reserve(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        ModelSpec spec = tmpl;
        spec.beta = i + 1 == steps ? beta_max
                                   : beta_min + (beta_max - beta_min) * static_cast<double>(i) /
                                                    static_cast<double>(steps - 1);
        const auto m = canonicalize(spec);
        const auto sol = solve(m, resolution);
        SweepRow row;
        row.beta = spec.beta;
        row.kappa_opt = sol.kappa_star;
        row.kappa_uniform = std::min(1.0, m.p().minCoeff()) * spectral_radius(m.R()).rho;
        row.gain = row.kappa_opt - row.kappa_uniform;
        row.x_star = sol.x_star.values();
        row.s_star = sol.s_star.values();
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace ratectl
