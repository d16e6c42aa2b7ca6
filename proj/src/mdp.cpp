#include "ratectl/mdp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "ratectl/io.hpp"

namespace ratectl {

namespace {

constexpr std::uint64_t kActionEntryCap = 200'000'000;

// Per-grid quantities shared by the Bellman sweep and the diagnostics.
struct SimTables {
    std::vector<double> action_log_growth;  // ln ||R's|| per action
    std::vector<std::uint32_t> successor;   // nearest grid point to normalize(R's)
    std::vector<double> state_log_budget;   // ln min(||x||_p', 1) per state
    std::vector<std::uint32_t> upper;       // N x K integer box bounds of A(x)
};

SimTables build_tables(const CanonicalModel& m, const SimplexGrid& grid) {
    if (grid.dim() != m.dim()) throw InvalidInput("grid dimension does not match the model");
    const std::size_t N = grid.size();
    const std::size_t K = grid.dim();
    const double denom = grid.denominator();
    SimTables t;
    t.action_log_growth.resize(N);
    t.successor.resize(N);
    t.state_log_budget.resize(N);
    t.upper.resize(N * K);
    for (std::size_t id = 0; id < N; ++id) {
        const Vector x = grid.point(id);
        const Vector y = m.R() * x;
        const double n = y.sum();
        t.action_log_growth[id] = std::log(n);
        t.successor[id] = static_cast<std::uint32_t>(grid.nearest(y / n));

        const double weighted = x.dot(m.p());
        t.state_log_budget[id] = std::log(std::min(weighted, 1.0));
        const double budget = std::min(weighted, 1.0);
        for (std::size_t i = 0; i < K; ++i) {
            // v_i / m <= x_i / budget + 1/(2m)
            const double bound = std::floor(denom * x[static_cast<Eigen::Index>(i)] / budget + 0.5 + 1e-9);
            t.upper[id * K + i] = static_cast<std::uint32_t>(std::min(bound, denom));
        }
    }
    return t;
}

// Action sets: contiguous index ranges when K = 2, explicit lists otherwise.
struct ActionSets {
    std::vector<std::uint32_t> lo, hi;          // K = 2
    std::vector<std::uint64_t> offsets;         // K >= 3
    std::vector<std::uint32_t> members;         // K >= 3
    bool ranges = false;
};

ActionSets build_action_sets(const SimTables& t, const SimplexGrid& grid) {
    const std::size_t N = grid.size();
    const std::size_t K = grid.dim();
    const std::uint32_t m = grid.denominator();
    ActionSets a;
    if (K == 2) {
        a.ranges = true;
        a.lo.resize(N);
        a.hi.resize(N);
        for (std::size_t id = 0; id < N; ++id) {
            const std::uint32_t u1 = t.upper[id * 2], u2 = t.upper[id * 2 + 1];
            const std::uint32_t lo = u2 >= m ? 0 : m - u2;
            const std::uint32_t hi = std::min(u1, m);
            if (lo > hi) throw NumericalFailure("value iteration: empty action set at grid point " + std::to_string(id));
            a.lo[id] = lo;
            a.hi[id] = hi;
        }
        return a;
    }

    a.offsets.reserve(N + 1);
    a.offsets.push_back(0);
    std::vector<std::uint32_t> v(K);
    for (std::size_t id = 0; id < N; ++id) {
        const std::uint32_t* ub = &t.upper[id * K];
        auto rec = [&](auto&& self, std::size_t pos, std::uint32_t remaining) -> void {
            if (pos + 1 == K) {
                if (remaining > ub[pos]) return;
                v[pos] = remaining;
                a.members.push_back(static_cast<std::uint32_t>(grid.index_of(v)));
                return;
            }
            const std::uint32_t top = std::min(remaining, ub[pos]);
            for (std::uint32_t u = 0; u <= top; ++u) {
                v[pos] = u;
                self(self, pos + 1, remaining - u);
            }
        };
        rec(rec, 0, m);
        if (a.members.size() > kActionEntryCap) throw CapacityError("value iteration: action sets exceed memory cap");
        if (a.members.size() == a.offsets.back())
            throw NumericalFailure("value iteration: empty action set at grid point " + std::to_string(id));
        a.offsets.push_back(a.members.size());
    }
    return a;
}

// Leftmost-argmax range queries over a fixed array.
class RangeArgmax {
public:
    explicit RangeArgmax(std::size_t n) : n_(n) {
        levels_ = static_cast<std::size_t>(std::bit_width(n));
        table_.assign(levels_ * n, 0);
    }

    void build(const std::vector<double>& q) {
        q_ = &q;
        std::iota(table_.begin(), table_.begin() + static_cast<std::ptrdiff_t>(n_), 0u);
        for (std::size_t k = 1; k < levels_; ++k) {
            const std::size_t half = std::size_t{1} << (k - 1);
            const std::uint32_t* prev = &table_[(k - 1) * n_];
            std::uint32_t* cur = &table_[k * n_];
            for (std::size_t i = 0; i + (std::size_t{1} << k) <= n_; ++i) cur[i] = better(prev[i], prev[i + half]);
        }
    }

    std::uint32_t query(std::uint32_t lo, std::uint32_t hi) const {
        const std::size_t len = hi - lo + 1;
        const std::size_t k = static_cast<std::size_t>(std::bit_width(len)) - 1;
        return better(table_[k * n_ + lo], table_[k * n_ + hi + 1 - (std::size_t{1} << k)]);
    }

private:
    std::uint32_t better(std::uint32_t a, std::uint32_t b) const {
        const double qa = (*q_)[a], qb = (*q_)[b];
        if (qa > qb) return a;
        if (qb > qa) return b;
        return std::min(a, b);
    }

    std::size_t n_;
    std::size_t levels_;
    std::vector<std::uint32_t> table_;
    const std::vector<double>* q_ = nullptr;
};

// Greedy action per state for the given Q table; leftmost argmax on ties.
template <typename Fn>
void for_each_greedy(const ActionSets& a, const std::vector<double>& q, RangeArgmax& rmq, std::size_t N, Fn&& fn) {
    if (a.ranges) {
        rmq.build(q);
        for (std::size_t id = 0; id < N; ++id) fn(id, rmq.query(a.lo[id], a.hi[id]));
        return;
    }
    for (std::size_t id = 0; id < N; ++id) {
        std::uint32_t best = a.members[a.offsets[id]];
        for (std::uint64_t k = a.offsets[id] + 1; k < a.offsets[id + 1]; ++k) {
            const std::uint32_t c = a.members[k];
            if (q[c] > q[best] || (q[c] == q[best] && c < best)) best = c;
        }
        fn(id, best);
    }
}

}  // namespace

SimplexGrid::SimplexGrid(std::size_t K, std::uint32_t m, std::uint64_t capacity) : K_(K), m_(m) {
    if (K < 2) throw InvalidInput("simplex grid needs K >= 2");
    if (m < 1) throw InvalidInput("simplex grid needs denominator m >= 1");
    const std::uint64_t n = lattice_size(K, m);
    if (n > capacity)
        throw CapacityError("simplex grid with " + std::to_string(n) + " points exceeds the cap of " +
                            std::to_string(capacity));

    binom_.assign(K + 1, std::vector<std::uint64_t>(m + 1, 0));
    for (std::uint32_t t = 0; t <= m; ++t) binom_[1][t] = 1;
    for (std::size_t p = 2; p <= K; ++p) {
        binom_[p][0] = 1;
        for (std::uint32_t t = 1; t <= m; ++t) binom_[p][t] = binom_[p][t - 1] + binom_[p - 1][t];
    }

    lattice_.reserve(static_cast<std::size_t>(n) * K);
    for_each_lattice_point(K, m, [&](std::span<const std::uint32_t> v) { lattice_.insert(lattice_.end(), v.begin(), v.end()); });
}

std::uint64_t SimplexGrid::count(std::size_t parts, std::uint32_t total) const { return binom_[parts][total]; }

Vector SimplexGrid::point(std::size_t id) const {
    const auto v = lattice(id);
    Vector x(static_cast<Eigen::Index>(K_));
    for (std::size_t i = 0; i < K_; ++i) x[static_cast<Eigen::Index>(i)] = static_cast<double>(v[i]) / m_;
    return x;
}

std::size_t SimplexGrid::index_of(std::span<const std::uint32_t> v) const {
    if (v.size() != K_) throw InvalidInput("lattice vector has the wrong dimension");
    std::uint64_t sum = 0;
    for (auto c : v) sum += c;
    if (sum != m_) throw InvalidInput("lattice vector does not sum to the grid denominator");

    std::uint64_t rank = 0;
    std::uint32_t remaining = m_;
    for (std::size_t pos = 0; pos + 1 < K_; ++pos) {
        // compositions with a smaller entry at `pos`
        const std::size_t tail_parts = K_ - pos;
        rank += count(tail_parts, remaining) - count(tail_parts, remaining - v[pos]);
        remaining -= v[pos];
    }
    return static_cast<std::size_t>(rank);
}

std::size_t SimplexGrid::nearest(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != K_) throw InvalidInput("nearest: dimension mismatch");
    std::vector<std::uint32_t> v(K_);
    std::vector<std::pair<double, std::size_t>> frac(K_);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < K_; ++i) {
        const double scaled = std::clamp(x[static_cast<Eigen::Index>(i)] * m_, 0.0, static_cast<double>(m_));
        const double fl = std::floor(scaled);
        v[i] = static_cast<std::uint32_t>(fl);
        frac[i] = {scaled - fl, i};
        assigned += v[i];
    }
    std::int64_t deficit = static_cast<std::int64_t>(m_) - assigned;
    // Round up the largest remainders; equal remainders favour earlier coordinates.
    std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; deficit > 0; k = (k + 1) % K_, --deficit) ++v[frac[k].second];
    for (std::size_t k = K_; deficit < 0; --deficit) {
        // only reachable when x sums to noticeably more than 1
        do { k = (k + K_ - 1) % K_; } while (v[frac[k].second] == 0);
        --v[frac[k].second];
    }
    return index_of(v);
}

ValueTable value_iteration(const CanonicalModel& m, const SimplexGrid& grid, const ValueIterationOptions& opts) {
    if (!(opts.gamma > 0.0 && opts.gamma < 1.0)) throw InvalidInput("discount gamma must lie in (0,1)");
    if (!(opts.epsilon > 0.0)) throw InvalidInput("epsilon must be positive");

    const SimTables t = build_tables(m, grid);
    const ActionSets actions = build_action_sets(t, grid);
    const std::size_t N = grid.size();
    const double gamma = opts.gamma;
    const double stop = opts.epsilon * (1.0 - gamma) / (2.0 * gamma);

    ValueTable vt;
    vt.gamma = gamma;
    vt.values.assign(N, 0.0);
    std::vector<double> next(N), q(N);
    RangeArgmax rmq(N);

    auto fill_q = [&](const std::vector<double>& v) {
        for (std::size_t a = 0; a < N; ++a) q[a] = t.action_log_growth[a] + gamma * v[t.successor[a]];
    };

    for (;;) {
        if (vt.iterations >= opts.max_iterations) throw NumericalFailure("value iteration did not converge");
        fill_q(vt.values);
        for_each_greedy(actions, q, rmq, N,
                        [&](std::size_t id, std::uint32_t best) { next[id] = t.state_log_budget[id] + q[best]; });
        double delta = 0.0;
        for (std::size_t id = 0; id < N; ++id) delta = std::max(delta, std::abs(next[id] - vt.values[id]));
        vt.values.swap(next);
        vt.sup_delta = delta;
        vt.delta_history.push_back(delta);
        ++vt.iterations;
        if (delta <= stop) break;
    }

    vt.policy.resize(N);
    fill_q(vt.values);
    for_each_greedy(actions, q, rmq, N, [&](std::size_t id, std::uint32_t best) { vt.policy[id] = best; });
    return vt;
}

std::size_t default_reference_point(const SimplexGrid& grid) {
    return grid.nearest(Vector::Constant(static_cast<Eigen::Index>(grid.dim()), 1.0 / static_cast<double>(grid.dim())));
}

double estimate_alpha(const ValueTable& vt, std::size_t reference_point) {
    return (1.0 - vt.gamma) * vt.values.at(reference_point);
}

BiasTable extract_bias(const ValueTable& vt, std::size_t reference_point) {
    BiasTable b;
    b.reference_point = reference_point;
    const double ref = vt.values.at(reference_point);
    b.g.reserve(vt.values.size());
    for (double v : vt.values) {
        b.g.push_back(v - ref);
        b.max_abs = std::max(b.max_abs, std::abs(b.g.back()));
    }
    return b;
}

std::vector<FixedPointCandidate> greedy_fixed_points(const ValueTable& vt, const CanonicalModel& m,
                                                     const SimplexGrid& grid) {
    if (vt.policy.size() != grid.size()) throw InvalidInput("value table does not match the grid");
    std::vector<FixedPointCandidate> out;
    for (std::size_t id = 0; id < grid.size(); ++id) {
        const std::size_t action = vt.policy[id];
        const Vector y = m.R() * grid.point(action);
        const std::size_t succ = grid.nearest(y / y.sum());
        const auto a = grid.lattice(id), b = grid.lattice(succ);
        std::uint32_t dist = 0;
        for (std::size_t i = 0; i < grid.dim(); ++i) dist = std::max(dist, a[i] > b[i] ? a[i] - b[i] : b[i] - a[i]);
        if (dist > 1) continue;
        const Vector x = grid.point(id);
        out.push_back({id, action, succ, std::min(x.dot(m.p()), 1.0) * y.sum()});
    }
    return out;
}

double bellman_residual(const ValueTable& vt, const CanonicalModel& m, const SimplexGrid& grid) {
    const SimTables t = build_tables(m, grid);
    const std::size_t N = grid.size();
    const std::size_t K = grid.dim();
    double worst = 0.0;
    for (std::size_t id = 0; id < N; ++id) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < N; ++a) {
            const auto v = grid.lattice(a);
            bool inside = true;
            for (std::size_t i = 0; i < K && inside; ++i) inside = v[i] <= t.upper[id * K + i];
            if (!inside) continue;
            best = std::max(best, t.action_log_growth[a] + vt.gamma * vt.values[t.successor[a]]);
        }
        worst = std::max(worst, std::abs(t.state_log_budget[id] + best - vt.values[id]));
    }
    return worst;
}

FixedPointSolution oracle_solution(const std::vector<FixedPointCandidate>& candidates, const CanonicalModel& m,
                                   const SimplexGrid& grid) {
    if (candidates.empty()) throw NumericalFailure("no greedy fixed-point candidate on this grid");
    const auto best = std::max_element(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        return a.growth_factor < b.growth_factor;
    });
    return make_solution(Mixture(grid.point(best->point)), Mixture(grid.point(best->action)), m,
                         SolveMethod::MdpOracle);
}

void write_value_table_csv(std::ostream& os, const ValueTable& vt, const SimplexGrid& grid, const BiasTable& bias) {
    os << "id";
    for (std::size_t i = 1; i <= grid.dim(); ++i) os << ",x_" << i;
    os << ",value,action,bias\n";
    for (std::size_t id = 0; id < grid.size(); ++id) {
        os << id;
        const Vector x = grid.point(id);
        for (Eigen::Index i = 0; i < x.size(); ++i) os << ',' << format_double(x[i]);
        os << ',' << format_double(vt.values[id]) << ',' << vt.policy[id] << ',' << format_double(bias.g[id]) << '\n';
    }
}

}  // namespace ratectl
