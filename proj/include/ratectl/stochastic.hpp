#pragma once

// Integer-valued branching simulation under the linear resource constraint.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "ratectl/core.hpp"

namespace ratectl {

using IntVector = std::vector<std::int64_t>;
using Rng = std::mt19937_64;

/// Chooses S(t) from Z(t). Must be safe to call concurrently.
using IntPolicy = std::function<IntVector(const IntVector& Z, std::size_t t)>;

enum class OffspringKind { Poisson, DeterministicRounding, CustomTable };

struct OffspringOutcome {
    IntVector v;
    double p = 0.0;
};

class OffspringModel {
public:
    /// Independent Poisson counts with E[xi_ij] = mean(i,j).
    static OffspringModel poisson(const Matrix& mean);
    /// Z'_i = floor(sum_j S_j mean(i,j) + 1/2); no randomness.
    static OffspringModel deterministic_rounding(const Matrix& mean);
    /// tables[j] lists the offspring vectors of one type-j parent. Throws
    /// InvalidInput on bad probabilities or if no table has a zero outcome.
    static OffspringModel custom_table(std::vector<std::vector<OffspringOutcome>> tables);

    OffspringKind kind() const { return kind_; }
    const Matrix& mean_matrix() const { return mean_; }
    std::size_t dim() const { return static_cast<std::size_t>(mean_.rows()); }
    const std::vector<std::vector<OffspringOutcome>>& tables() const { return tables_; }

    /// P(xi_j = 0) for one parent of type j.
    double zero_probability(std::size_t j) const;

private:
    OffspringKind kind_ = OffspringKind::Poisson;
    Matrix mean_;
    std::vector<std::vector<OffspringOutcome>> tables_;
};

double int_norm(const IntVector& Z);

/// sum S <= ||Z||_p' (with the core slack) and 0 <= S <= Z exactly.
bool int_feasible(const IntVector& Z, const IntVector& S, const CanonicalModel& m);

/// S = ceil(kbar s*) with kbar the largest k > 0 keeping ceil(k s*) feasible.
/// Zero when no positive k works. Throws ExtinctState for Z = 0.
IntVector theorem3_policy(const IntVector& Z, const Mixture& s_star, const CanonicalModel& m);

/// S_i = floor(c Z_i) with c = min(1, min_i p'_i).
IntPolicy uniform_int_policy(const CanonicalModel& m);

IntVector sample_offspring(const OffspringModel& model, const IntVector& S, Rng& rng);

struct PathSummary {
    bool extinct = false;
    std::size_t extinction_time = 0;  ///< first t with Z(t) = 0, if extinct
    bool overflow = false;            ///< stopped early once ||Z|| > 1e12
    std::size_t steps = 0;            ///< transitions actually simulated
    std::vector<double> log_sizes;    ///< ln ||Z(t)||, t = 0..steps
    double tail_alpha = 0.0;          ///< slope over the last ceil(steps/2) steps
};

inline constexpr double kOverflowCap = 1e12;

/// Throws InfeasibleAction (with the step) if the policy leaves the integer
/// or the real constraint set.
PathSummary simulate(const IntPolicy& policy, const IntVector& Z0, std::size_t horizon, const CanonicalModel& m,
                     const OffspringModel& offspring, Rng& rng);

struct MonteCarloConfig {
    std::size_t runs = 1;
    std::size_t horizon = 100;
    IntVector z0;
    std::uint64_t base_seed = 0;
    unsigned threads = 1;
};

struct MonteCarloReport {
    std::size_t runs = 0;
    std::size_t extinction_count = 0;
    std::size_t overflow_count = 0;
    double extinction_probability = 0.0;
    double half_width = 0.0;  ///< 95% normal-approximation interval
    std::size_t conditional_count = 0;
    double conditional_alpha_mean = 0.0;
    double conditional_alpha_std = 0.0;
    std::uint64_t seed = 0;
};

/// Run r uses Rng(base_seed + r); results do not depend on `threads`.
MonteCarloReport monte_carlo(const MonteCarloConfig& cfg, const IntPolicy& policy, const CanonicalModel& m,
                             const OffspringModel& offspring);

}  // namespace ratectl
