#pragma once

// Discretised discounted value iteration on the simplex: an independent
// numerical oracle for the optimal growth rate via the vanishing-discount
// estimate alpha ~ (1 - gamma) V^gamma.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ratectl/core.hpp"
#include "ratectl/optimizer.hpp"

namespace ratectl {

/// The lattice {v/m : v in Z_+^K, sum(v) = m} in lexicographic order, with an
/// exact rank function as the inverse lookup.
class SimplexGrid {
public:
    static constexpr std::uint64_t kDefaultCapacity = 5'000'000;

    /// Throws InvalidInput unless K >= 2 and m >= 1; CapacityError when the
    /// point count exceeds `capacity`.
    SimplexGrid(std::size_t K, std::uint32_t m, std::uint64_t capacity = kDefaultCapacity);

    std::size_t dim() const { return K_; }
    std::uint32_t denominator() const { return m_; }
    std::size_t size() const { return lattice_.size() / K_; }

    std::span<const std::uint32_t> lattice(std::size_t id) const { return {lattice_.data() + id * K_, K_}; }
    Vector point(std::size_t id) const;

    /// Rank of a lattice vector. Throws InvalidInput if v is not on the lattice.
    std::size_t index_of(std::span<const std::uint32_t> v) const;

    /// Total-variation nearest lattice point to x in the simplex; ties go to
    /// the larger first coordinate.
    std::size_t nearest(const Vector& x) const;

private:
    std::uint64_t count(std::size_t parts, std::uint32_t total) const;

    std::size_t K_;
    std::uint32_t m_;
    std::vector<std::uint32_t> lattice_;
    // binom_[parts][total] = number of compositions of `total` into `parts`
    std::vector<std::vector<std::uint64_t>> binom_;
};

struct ValueTable {
    double gamma = 0.0;
    std::vector<double> values;        ///< V^gamma per grid point
    std::vector<std::uint32_t> policy; ///< greedy action (grid id) per grid point
    double sup_delta = 0.0;            ///< last sup-norm change
    std::vector<double> delta_history; ///< sup-norm change per sweep
    std::size_t iterations = 0;
};

struct ValueIterationOptions {
    double gamma = 0.999;
    double epsilon = 1e-6;
    std::size_t max_iterations = 10'000'000;
};

/// Jacobi value iteration of V(x) = max_{s in A(x)} [r(x,s) + gamma V(succ(s))]
/// where A(x) holds the grid points within phi^S(x) widened by 1/(2m) per
/// coordinate and succ(s) is the grid point nearest normalize(R's). Stops once
/// the sup-norm change is at most epsilon (1 - gamma) / (2 gamma).
ValueTable value_iteration(const CanonicalModel& m, const SimplexGrid& grid, const ValueIterationOptions& opts = {});

/// Grid point nearest the uniform mixture.
std::size_t default_reference_point(const SimplexGrid& grid);

/// (1 - gamma) V^gamma(reference).
double estimate_alpha(const ValueTable& vt, std::size_t reference_point);

struct BiasTable {
    std::vector<double> g;  ///< V(x) - V(reference)
    double max_abs = 0.0;
    std::size_t reference_point = 0;
};

BiasTable extract_bias(const ValueTable& vt, std::size_t reference_point);

struct FixedPointCandidate {
    std::size_t point = 0;
    std::size_t action = 0;
    std::size_t successor = 0;
    double growth_factor = 0.0;  ///< exp of the one-step SIM reward
};

/// Grid points whose greedy successor lies within 1/m (max-coordinate
/// distance) of the point itself.
std::vector<FixedPointCandidate> greedy_fixed_points(const ValueTable& vt, const CanonicalModel& m,
                                                     const SimplexGrid& grid);

/// Largest Bellman residual |T V - V| over the grid, by direct enumeration of
/// every action set (no range-query shortcut).
double bellman_residual(const ValueTable& vt, const CanonicalModel& m, const SimplexGrid& grid);

/// The candidate of largest growth factor as an (approximate) solution,
/// tagged mdp-oracle. Throws NumericalFailure when the list is empty.
FixedPointSolution oracle_solution(const std::vector<FixedPointCandidate>& candidates, const CanonicalModel& m,
                                   const SimplexGrid& grid);

/// Columns id, x_1..x_K, value, action, bias.
void write_value_table_csv(std::ostream& os, const ValueTable& vt, const SimplexGrid& grid, const BiasTable& bias);

}  // namespace ratectl
