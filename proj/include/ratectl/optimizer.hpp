#pragma once

// Optimal population mixture, optimal growth factor, the uniform baseline and
// budget thresholds.

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "ratectl/core.hpp"

namespace ratectl {

enum class SolveMethod { K2ClosedForm, GridRefine, MdpOracle };

std::string_view to_string(SolveMethod method);

/// A stationary optimum: x* = normalize(R' s*) with s* in phi^S(x*), and
/// kappa* = ||R' (facet_budget(x*) s*)||.
struct FixedPointSolution {
    Mixture x_star;
    Mixture s_star;
    double kappa_star = 0.0;
    double alpha_star = 0.0;
    double residual_fixed_point = 0.0;  ///< ||normalize(R' s*) - x*||_1
    double residual_feasibility = 0.0;  ///< sim_violation(x*, s*)
    SolveMethod method = SolveMethod::K2ClosedForm;
    bool degenerate = false;  ///< equal or proportional columns (K = 2)
};

/// Builds a solution from a candidate (x, s) and fills kappa, alpha and both
/// residuals from the model.
FixedPointSolution make_solution(const Mixture& x, const Mixture& s, const CanonicalModel& m, SolveMethod method);

/// The s = x Perron solution, optimal when phi^S(x) = {x}.
FixedPointSolution perron_solution(const CanonicalModel& m, SolveMethod method);

/// Closed form for K = 2 with symmetric revenue p' = (b, b): the greedy fixed
/// point s1 = min(x1/b, 1), x = normalize(R' s) after relabelling types so the
/// first column sum dominates. Throws UnsupportedInstance otherwise.
FixedPointSolution solve_k2(const CanonicalModel& m);

/// Any K: enumerate sub-population directions on the simplex lattice with the
/// given denominator, keep the admissible direction of largest growth factor
/// and polish it by projected pairwise coordinate ascent. An exact candidate
/// from the top superlevel set (bisection on kappa with LP feasibility) is
/// compared as well, since the ascent can stall on the curved boundary.
FixedPointSolution solve_general(const CanonicalModel& m, std::size_t resolution);

/// solve_k2 when it applies, otherwise solve_general.
FixedPointSolution solve(const CanonicalModel& m, std::size_t resolution = 200);

struct ResidualReport {
    double residual_fixed_point = 0.0;
    double residual_feasibility = 0.0;
    double kappa_mismatch = 0.0;        ///< |kappa* - ||R'(facet_budget s*)|||
    double rollout_max_rel_error = 0.0; ///< max_t | ||w(t)|| / kappa*^t - 1 |
    bool rollout_ok = false;
    bool passed = false;
};

/// Recomputes the residuals and runs a 10-step mixture-policy rollout from x*.
ResidualReport verify_fixed_point(const FixedPointSolution& sol, const CanonicalModel& m);

/// kappa_u = b rho(R') for symmetric p' = (b,...,b), b capped at 1.
/// Throws UnsupportedInstance for non-symmetric revenue.
double uniform_growth_factor(const CanonicalModel& m);

enum class ThresholdSolver { Optimal, Uniform };

/// Growth factor of `tmpl` with its beta replaced, under the chosen solver.
double growth_factor_at(const ModelSpec& tmpl, double beta, ThresholdSolver solver, std::size_t resolution = 200);

/// Smallest beta in (0,1] whose growth factor reaches `target`, by bisection
/// (absolute tolerance well below 1e-6). std::nullopt when even beta = 1 falls
/// short of the target.
std::optional<double> beta_threshold(const ModelSpec& tmpl, double target, ThresholdSolver solver,
                                     std::size_t resolution = 200);

struct SweepRow {
    double beta = 0.0;
    double kappa_opt = 0.0;
    double kappa_uniform = 0.0;
    double gain = 0.0;
    Vector x_star;
    Vector s_star;
};

/// One row per beta on an evenly spaced grid of `steps` points spanning
/// [beta_min, beta_max]. Requires 0 < beta_min < beta_max <= 1, steps >= 2.
std::vector<SweepRow> sweep(const ModelSpec& tmpl, double beta_min, double beta_max, std::size_t steps,
                            std::size_t resolution = 200);

}  // namespace ratectl
