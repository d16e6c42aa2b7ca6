#pragma once

// Deterministic trajectory engine for the real-valued branching process, the
// two reference policies, and growth-rate estimation from trajectories.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "ratectl/core.hpp"

namespace ratectl {

/// Maps (state, step index) to a reproductive sub-population. Rollouts feed
/// policies simplex-scaled states, so a policy must be positively
/// homogeneous: policy(a*w, t) = a*policy(w, t) for a > 0.
using Policy = std::function<Vector(const Vector& w, std::size_t t)>;

/// A feasible sequence {(w(t), s(t))}. States are kept on the simplex with the
/// log of the true norm stored alongside, so long horizons cannot overflow.
/// Actions are stored at the scale of the stored state, hence
///   R' actions[t] = states[t+1] * exp(log_norms[t+1] - log_norms[t]).
struct Trajectory {
    std::vector<Vector> states;      ///< horizon + 1 entries
    std::vector<double> log_norms;   ///< ln ||w(t)||, horizon + 1 entries
    std::vector<Vector> actions;     ///< horizon entries
    std::vector<double> rewards;     ///< reward_real per step, horizon entries
    std::size_t horizon = 0;

    /// The unscaled population profile w(t).
    Vector profile(std::size_t t) const;
};

struct GrowthEstimate {
    double alpha_hat = 0.0;   ///< (1/H) ln(||w(H)|| / ||w(0)||)
    double kappa_hat = 1.0;   ///< exp(alpha_hat)
    double tail_alpha = 0.0;  ///< same slope over the last ceil(H/2) steps
};

/// w(t+1) = R's. Throws InfeasibleAction if s is not in phi^R(w).
Vector step_real(const Vector& w, const Vector& s, const CanonicalModel& m);

/// Applies the policy for `horizon` steps from w0. Throws InfeasibleAction
/// carrying the step index when the policy leaves phi^R.
Trajectory rollout(const Policy& policy, const Vector& w0, std::size_t horizon, const CanonicalModel& m);

struct UniformPolicy {
    Policy policy;
    double fraction = 1.0;  ///< c in s = c w
    bool extended = false;  ///< true when p' is not symmetric (c = min_i p'_i)
};

/// s(t) = c w(t) with c = min(1, min_i p'_i); c = beta for symmetric revenue.
UniformPolicy uniform_policy(const CanonicalModel& m);

/// Reaches the fixed-point direction x* and then holds it:
///   steps 0..K-2  s = c(t) w with c(t) the largest feasible uniform scalar,
///   step  K-1     s = largest feasible multiple of s*,
///   afterwards    s = facet_budget(w) s*.
/// Whenever the current mixture already equals x* (1e-9, L1) the hold rule is
/// used immediately. Throws InvalidInput if (x*, s*) is not a fixed point.
Policy mixture_policy(const Mixture& x_star, const Mixture& s_star, const CanonicalModel& m);

/// Requires horizon >= 2. An extinct trajectory yields -infinity rates.
GrowthEstimate growth_estimate(const Trajectory& traj);

/// Columns t, w_1..w_K (simplex-scaled), log_norm, reward. The reward field of
/// the final row is empty.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace ratectl
