#include "ratectl/detproc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ratectl/io.hpp"

namespace ratectl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kAlignTolerance = 1e-9;

// Largest c <= 1 with c*w feasible: ||c w|| <= ||w||_p'.
double uniform_scalar(const Vector& w, const CanonicalModel& m) {
    const double total = l1_norm(w);
    return std::min(1.0, weighted_norm(w, m.p()) / total);
}

}  // namespace

Vector Trajectory::profile(std::size_t t) const {
    if (!std::isfinite(log_norms.at(t))) return Vector::Zero(states.at(t).size());
    return states.at(t) * std::exp(log_norms[t]);
}

Vector step_real(const Vector& w, const Vector& s, const CanonicalModel& m) {
    if (!real_feasible(w, s, m)) throw InfeasibleAction("sub-population outside phi^R(w)");
    return m.R() * s;
}

Trajectory rollout(const Policy& policy, const Vector& w0, std::size_t horizon, const CanonicalModel& m) {
    if (static_cast<std::size_t>(w0.size()) != m.dim()) throw InvalidInput("rollout: w0 dimension mismatch");
    if ((w0.array() < 0.0).any()) throw InvalidInput("rollout: w0 must be nonnegative");
    const double n0 = l1_norm(w0);
    if (!(n0 > 0.0)) throw DegenerateInput("rollout: zero initial population");

    Trajectory traj;
    traj.horizon = horizon;
    traj.states.reserve(horizon + 1);
    traj.log_norms.reserve(horizon + 1);
    traj.actions.reserve(horizon);
    traj.rewards.reserve(horizon);
    traj.states.push_back(w0 / n0);
    traj.log_norms.push_back(std::log(n0));

    const auto K = static_cast<Eigen::Index>(m.dim());
    for (std::size_t t = 0; t < horizon; ++t) {
        const Vector& w = traj.states.back();
        if (!std::isfinite(traj.log_norms.back())) {
            // Extinct: the zero state only admits the zero action.
            traj.actions.push_back(Vector::Zero(K));
            traj.rewards.push_back(kNegInf);
            traj.states.push_back(Vector::Zero(K));
            traj.log_norms.push_back(kNegInf);
            continue;
        }
        Vector s = policy(w, t);
        if (s.size() != K) throw InvalidInput("policy returned an action of the wrong dimension");
        if (!real_feasible(w, s, m)) throw InfeasibleAction("policy action outside phi^R(w)", t);
        const double reward = reward_real(w, s, m);
        const Vector next = m.R() * s;
        const double n = l1_norm(next);
        traj.actions.push_back(std::move(s));
        traj.rewards.push_back(reward);
        if (n > 0.0) {
            traj.states.push_back(next / n);
            traj.log_norms.push_back(traj.log_norms.back() + std::log(n));
        } else {
            traj.states.push_back(Vector::Zero(K));
            traj.log_norms.push_back(kNegInf);
        }
    }
    return traj;
}

UniformPolicy uniform_policy(const CanonicalModel& m) {
    UniformPolicy u;
    u.fraction = std::min(1.0, m.p().minCoeff());
    u.extended = !m.symmetric_revenue();
    const double c = u.fraction;
    u.policy = [c](const Vector& w, std::size_t) -> Vector { return c * w; };
    return u;
}

Policy mixture_policy(const Mixture& x_star, const Mixture& s_star, const CanonicalModel& m) {
    if (x_star.dim() != m.dim() || s_star.dim() != m.dim()) throw InvalidInput("mixture_policy: dimension mismatch");
    if (sim_violation(x_star, s_star.values(), m) > 1e-8)
        throw InvalidInput("mixture_policy: s* is not an admissible action at x*");
    const double drift = (normalize(m.R() * s_star.values()).values() - x_star.values()).cwiseAbs().sum();
    if (drift > 1e-6) throw InvalidInput("mixture_policy: normalize(R' s*) does not reproduce x*");

    const std::size_t K = m.dim();
    return [x = x_star.values(), s = s_star.values(), m, K](const Vector& w, std::size_t t) -> Vector {
        const double total = l1_norm(w);
        if (!(total > 0.0)) return Vector::Zero(w.size());
        const bool aligned = (w / total - x).cwiseAbs().sum() <= kAlignTolerance;
        if (aligned || t >= K) return facet_budget(w, m) * s;
        if (t + 1 < K) return uniform_scalar(w, m) * w;
        // Largest k with k s* <= w and k ||s*|| <= ||w||_p'.
        double k = weighted_norm(w, m.p());
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (s[i] > 0.0) k = std::min(k, w[i] / s[i]);
        return k * s;
    };
}

GrowthEstimate growth_estimate(const Trajectory& traj) {
    const std::size_t H = traj.horizon;
    if (H < 2) throw InvalidInput("growth_estimate needs a horizon of at least 2");
    if (traj.log_norms.size() != H + 1) throw InvalidInput("growth_estimate: malformed trajectory");
    if (!std::isfinite(traj.log_norms.front())) throw DegenerateInput("growth_estimate: zero initial population");

    GrowthEstimate g;
    const double end = traj.log_norms[H];
    if (!std::isfinite(end)) {
        g.alpha_hat = kNegInf;
        g.kappa_hat = 0.0;
        g.tail_alpha = kNegInf;
        return g;
    }
    g.alpha_hat = (end - traj.log_norms.front()) / static_cast<double>(H);
    g.kappa_hat = std::exp(g.alpha_hat);
    const std::size_t tail = (H + 1) / 2;
    g.tail_alpha = (end - traj.log_norms[H - tail]) / static_cast<double>(tail);
    return g;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    const std::size_t K = traj.states.empty() ? 0 : static_cast<std::size_t>(traj.states.front().size());
    os << "t";
    for (std::size_t i = 1; i <= K; ++i) os << ",w_" << i;
    os << ",log_norm,reward\n";
    for (std::size_t t = 0; t < traj.states.size(); ++t) {
        os << t;
        for (Eigen::Index i = 0; i < traj.states[t].size(); ++i) os << ',' << format_double(traj.states[t][i]);
        os << ',' << format_double(traj.log_norms[t]) << ',';
        if (t < traj.rewards.size()) os << format_double(traj.rewards[t]);
        os << '\n';
    }
}

}  // namespace ratectl
