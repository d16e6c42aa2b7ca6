#include "ratectl/stochastic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace ratectl {

namespace {

constexpr double kProbabilityTolerance = 1e-9;

void require_dim(const IntVector& v, std::size_t K, const char* what) {
    if (v.size() != K) throw InvalidInput(std::string(what) + ": expected " + std::to_string(K) + " entries");
}

Vector to_real(const IntVector& v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = static_cast<double>(v[i]);
    return out;
}

// ceil(v) where v carries floating error from a ratio that should be an
// integer at exact breakpoints.
std::int64_t snapped_ceil(double v) {
    const double r = std::nearbyint(v);
    const double tol = std::min(1e-9 * std::max(1.0, std::abs(v)), 1e-6);
    if (std::abs(v - r) <= tol) return static_cast<std::int64_t>(r);
    return static_cast<std::int64_t>(std::ceil(v));
}

// Neumaier summation.
struct CompensatedSum {
    double sum = 0.0, c = 0.0;
    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            c += (sum - t) + x;
        else
            c += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + c; }
};

}  // namespace

OffspringModel OffspringModel::poisson(const Matrix& mean) {
    if (mean.rows() != mean.cols() || mean.rows() < 1) throw InvalidInput("offspring mean matrix must be square");
    if (!mean.allFinite() || (mean.array() < 0.0).any()) throw InvalidInput("offspring means must be nonnegative");
    OffspringModel o;
    o.kind_ = OffspringKind::Poisson;
    o.mean_ = mean;
    return o;
}

OffspringModel OffspringModel::deterministic_rounding(const Matrix& mean) {
    OffspringModel o = poisson(mean);
    o.kind_ = OffspringKind::DeterministicRounding;
    return o;
}

OffspringModel OffspringModel::custom_table(std::vector<std::vector<OffspringOutcome>> tables) {
    const std::size_t K = tables.size();
    if (K == 0) throw InvalidInput("custom offspring table is empty");
    OffspringModel o;
    o.kind_ = OffspringKind::CustomTable;
    o.mean_ = Matrix::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
    for (std::size_t j = 0; j < K; ++j) {
        if (tables[j].empty()) throw InvalidInput("offspring table for type " + std::to_string(j + 1) + " is empty");
        double total = 0.0;
        for (const auto& out : tables[j]) {
            require_dim(out.v, K, "offspring outcome");
            if (!std::isfinite(out.p) || out.p < 0.0) throw InvalidInput("offspring probability must lie in [0,1]");
            for (std::size_t i = 0; i < K; ++i) {
                if (out.v[i] < 0) throw InvalidInput("offspring counts must be nonnegative");
                o.mean_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
                    out.p * static_cast<double>(out.v[i]);
            }
            total += out.p;
        }
        if (std::abs(total - 1.0) > kProbabilityTolerance)
            throw InvalidInput("offspring probabilities for type " + std::to_string(j + 1) + " do not sum to 1");
    }
    o.tables_ = std::move(tables);
    for (std::size_t j = 0; j < K; ++j)
        if (!(o.zero_probability(j) > 0.0))
            throw InvalidInput("type " + std::to_string(j + 1) + " parents must have no offspring with positive probability");
    return o;
}

double OffspringModel::zero_probability(std::size_t j) const {
    const auto col = mean_.col(static_cast<Eigen::Index>(j));
    switch (kind_) {
        case OffspringKind::Poisson: return std::exp(-col.sum());
        case OffspringKind::DeterministicRounding: return (col.array() < 0.5).all() ? 1.0 : 0.0;
        case OffspringKind::CustomTable: {
            double p = 0.0;
            for (const auto& out : tables_[j])
                if (std::all_of(out.v.begin(), out.v.end(), [](std::int64_t c) { return c == 0; })) p += out.p;
            return p;
        }
    }
    return 0.0;
}

double int_norm(const IntVector& Z) {
    double n = 0.0;
    for (auto z : Z) n += static_cast<double>(z);
    return n;
}

bool int_feasible(const IntVector& Z, const IntVector& S, const CanonicalModel& m) {
    require_dim(Z, m.dim(), "int_feasible Z");
    require_dim(S, m.dim(), "int_feasible S");
    std::int64_t total = 0;
    for (std::size_t i = 0; i < Z.size(); ++i) {
        if (S[i] < 0 || S[i] > Z[i]) return false;
        total += S[i];
    }
    const double budget = weighted_norm(to_real(Z), m.p());
    return static_cast<double>(total) <= budget + 1e-9 * (1.0 + budget);
}

IntVector theorem3_policy(const IntVector& Z, const Mixture& s_star, const CanonicalModel& m) {
    const std::size_t K = m.dim();
    require_dim(Z, K, "theorem3_policy Z");
    if (s_star.dim() != K) throw InvalidInput("theorem3_policy: s* dimension mismatch");
    if (std::any_of(Z.begin(), Z.end(), [](std::int64_t z) { return z < 0; }))
        throw InvalidInput("theorem3_policy: negative population");
    if (std::all_of(Z.begin(), Z.end(), [](std::int64_t z) { return z == 0; }))
        throw ExtinctState("theorem3_policy: population is extinct");

    // ceil(k s*) at the breakpoint k = n / s*_i
    IntVector S(K);
    auto at_breakpoint = [&](std::size_t i, std::int64_t n) {
        for (std::size_t j = 0; j < K; ++j) {
            if (j == i)
                S[j] = n;
            else if (s_star[j] <= 0.0)
                S[j] = 0;
            else
                S[j] = snapped_ceil(static_cast<double>(n) * s_star[j] / s_star[i]);
        }
        return int_feasible(Z, S, m);
    };

    IntVector best(K, 0);
    std::int64_t best_total = 0;
    for (std::size_t i = 0; i < K; ++i) {
        if (s_star[i] <= 0.0 || Z[i] == 0) continue;
        if (!at_breakpoint(i, 1)) continue;
        std::int64_t lo = 1, hi = Z[i];  // lo feasible
        while (lo < hi) {
            const std::int64_t mid = lo + (hi - lo + 1) / 2;
            if (at_breakpoint(i, mid))
                lo = mid;
            else
                hi = mid - 1;
        }
        at_breakpoint(i, lo);
        std::int64_t total = 0;
        for (auto v : S) total += v;
        // ceil(k s*) grows monotonically in k, so the largest total is kbar
        if (total > best_total) {
            best_total = total;
            best = S;
        }
    }
    return best;
}

IntPolicy uniform_int_policy(const CanonicalModel& m) {
    const double c = std::min(1.0, m.p().minCoeff());
    return [c](const IntVector& Z, std::size_t) {
        IntVector S(Z.size());
        for (std::size_t i = 0; i < Z.size(); ++i) S[i] = static_cast<std::int64_t>(std::floor(c * static_cast<double>(Z[i])));
        return S;
    };
}

IntVector sample_offspring(const OffspringModel& model, const IntVector& S, Rng& rng) {
    const std::size_t K = model.dim();
    require_dim(S, K, "sample_offspring S");
    if (std::any_of(S.begin(), S.end(), [](std::int64_t s) { return s < 0; }))
        throw InvalidInput("sample_offspring: negative sub-population");

    IntVector out(K, 0);
    const Matrix& R = model.mean_matrix();
    switch (model.kind()) {
        case OffspringKind::Poisson:
        case OffspringKind::DeterministicRounding: {
            for (std::size_t i = 0; i < K; ++i) {
                double mean = 0.0;
                for (std::size_t j = 0; j < K; ++j)
                    mean += static_cast<double>(S[j]) * R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                if (model.kind() == OffspringKind::DeterministicRounding) {
                    out[i] = static_cast<std::int64_t>(std::floor(mean + 0.5));
                } else if (mean > 0.0) {
                    // a sum of independent Poissons is Poisson with the summed mean
                    out[i] = std::poisson_distribution<std::int64_t>(mean)(rng);
                }
            }
            break;
        }
        case OffspringKind::CustomTable: {
            for (std::size_t j = 0; j < K; ++j) {
                std::int64_t left = S[j];
                double mass = 1.0;
                const auto& table = model.tables()[j];
                for (std::size_t k = 0; k < table.size() && left > 0; ++k) {
                    std::int64_t c = left;
                    if (k + 1 < table.size()) {
                        const double p = mass > 0.0 ? std::clamp(table[k].p / mass, 0.0, 1.0) : 1.0;
                        c = std::binomial_distribution<std::int64_t>(left, p)(rng);
                        mass -= table[k].p;
                    }
                    for (std::size_t i = 0; i < K; ++i) out[i] += c * table[k].v[i];
                    left -= c;
                }
            }
            break;
        }
    }
    return out;
}

PathSummary simulate(const IntPolicy& policy, const IntVector& Z0, std::size_t horizon, const CanonicalModel& m,
                     const OffspringModel& offspring, Rng& rng) {
    const std::size_t K = m.dim();
    require_dim(Z0, K, "simulate Z0");
    if (offspring.dim() != K) throw InvalidInput("simulate: offspring model dimension mismatch");
    if (std::any_of(Z0.begin(), Z0.end(), [](std::int64_t z) { return z < 0; }))
        throw InvalidInput("simulate: negative initial population");
    if (int_norm(Z0) <= 0.0) throw InvalidInput("simulate: initial population is zero");

    PathSummary path;
    path.log_sizes.reserve(horizon + 1);
    path.log_sizes.push_back(std::log(int_norm(Z0)));
    IntVector Z = Z0;
    for (std::size_t t = 0; t < horizon; ++t) {
        const IntVector S = policy(Z, t);
        if (S.size() != K) throw InvalidInput("policy returned an action of the wrong dimension");
        if (!int_feasible(Z, S, m)) throw InfeasibleAction("policy action outside the integer constraint set", t);
        if (!real_feasible(to_real(Z), to_real(S), m)) throw InfeasibleAction("policy action outside phi^R(Z)", t);
        Z = sample_offspring(offspring, S, rng);
        path.steps = t + 1;
        const double n = int_norm(Z);
        if (n == 0.0) {
            path.extinct = true;
            path.extinction_time = t + 1;
            path.log_sizes.push_back(-std::numeric_limits<double>::infinity());
            break;
        }
        path.log_sizes.push_back(std::log(n));
        if (n > kOverflowCap) {
            path.overflow = true;
            break;
        }
    }

    if (path.extinct) {
        path.tail_alpha = -std::numeric_limits<double>::infinity();
    } else if (path.steps > 0) {
        const std::size_t tail = (path.steps + 1) / 2;
        path.tail_alpha = (path.log_sizes[path.steps] - path.log_sizes[path.steps - tail]) / static_cast<double>(tail);
    }
    return path;
}

MonteCarloReport monte_carlo(const MonteCarloConfig& cfg, const IntPolicy& policy, const CanonicalModel& m,
                             const OffspringModel& offspring) {
    if (cfg.runs < 1) throw InvalidInput("monte_carlo needs at least one run");
    require_dim(cfg.z0, m.dim(), "monte_carlo z0");

    struct Outcome {
        bool extinct = false;
        bool overflow = false;
        double tail_alpha = 0.0;
        std::exception_ptr error;
    };
    std::vector<Outcome> results(cfg.runs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < cfg.runs; r = next++) {
            try {
                Rng rng(cfg.base_seed + r);
                const auto path = simulate(policy, cfg.z0, cfg.horizon, m, offspring, rng);
                results[r] = {path.extinct, path.overflow, path.tail_alpha, nullptr};
            } catch (...) {
                results[r].error = std::current_exception();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.runs)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    MonteCarloReport rep;
    rep.runs = cfg.runs;
    rep.seed = cfg.base_seed;
    CompensatedSum alpha_sum;
    for (const auto& o : results) {
        if (o.error) std::rethrow_exception(o.error);
        if (o.extinct) {
            ++rep.extinction_count;
            continue;
        }
        if (o.overflow) ++rep.overflow_count;
        ++rep.conditional_count;
        alpha_sum.add(o.tail_alpha);
    }
    const double n = static_cast<double>(cfg.runs);
    rep.extinction_probability = static_cast<double>(rep.extinction_count) / n;
    rep.half_width = 1.96 * std::sqrt(rep.extinction_probability * (1.0 - rep.extinction_probability) / n);
    if (rep.conditional_count > 0) {
        rep.conditional_alpha_mean = alpha_sum.value() / static_cast<double>(rep.conditional_count);
        if (rep.conditional_count > 1) {
            CompensatedSum sq;
            for (const auto& o : results)
                if (!o.extinct) sq.add((o.tail_alpha - rep.conditional_alpha_mean) * (o.tail_alpha - rep.conditional_alpha_mean));
            rep.conditional_alpha_std = std::sqrt(sq.value() / static_cast<double>(rep.conditional_count - 1));
        }
    }
    return rep;
}

}  // namespace ratectl
