#pragma once

// Problem-instance types, canonical form, simplex geometry and the action-set
// predicates of the controlled branching process.
//
// Conventions: ||v|| is the unit-weight L1 norm (a plain sum, since every
// population vector is nonnegative) and ||v||_p the p-weighted L1 norm.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ratectl/errors.hpp"

namespace ratectl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Full problem instance in original units: offspring means R, revenue p,
/// cost q and budget fraction beta. Constraint: ||s||_q <= beta ||w||_p.
struct ModelSpec {
    Matrix R;
    Vector p;
    Vector q;
    double beta = 1.0;

    std::size_t dim() const { return static_cast<std::size_t>(R.rows()); }
};

struct Violation {
    std::string field;
    std::string reason;
};

/// Empty result means the spec is valid.
std::vector<Violation> validate_model(const ModelSpec& spec);

/// Rescaled instance with q and beta absorbed. The only form downstream
/// solvers accept; the constraint becomes ||s|| <= ||w||_p' and s <= w.
class CanonicalModel {
public:
    /// Throws InvalidInput unless R' is square, strictly positive, K >= 2 and
    /// p' is strictly positive with matching dimension.
    CanonicalModel(Matrix r_prime, Vector p_prime);

    const Matrix& R() const { return r_; }
    const Vector& p() const { return p_; }
    std::size_t dim() const { return static_cast<std::size_t>(r_.rows()); }

    /// Column sums ||R'_(.,j)||.
    Vector column_sums() const { return r_.colwise().sum().transpose(); }

    /// True when p' = (b,...,b) up to a relative tolerance.
    bool symmetric_revenue(double rel_tol = 1e-12) const;

private:
    Matrix r_;
    Vector p_;
};

/// R'_ij = q_i R_ij / q_j and p'_i = beta p_i / q_i. Throws InvalidInput on
/// an invalid spec.
CanonicalModel canonicalize(const ModelSpec& spec);

/// A point of the simplex: nonnegative, coordinates summing to 1 within 1e-12.
class Mixture {
public:
    static constexpr double kSumTolerance = 1e-12;

    explicit Mixture(Vector x);

    const Vector& values() const { return x_; }
    double operator[](std::size_t i) const { return x_[static_cast<Eigen::Index>(i)]; }
    std::size_t dim() const { return static_cast<std::size_t>(x_.size()); }

private:
    Vector x_;
};

double l1_norm(const Vector& w);

/// sum_i weights_i w_i. Throws InvalidInput on dimension mismatch.
double weighted_norm(const Vector& w, const Vector& weights);

/// w / ||w||. Throws DegenerateInput for a zero (or non-positive-sum) vector.
Mixture normalize(const Vector& w);

/// Slack used by every feasibility predicate: 1e-9 (1 + ||w||).
double feasibility_tolerance(const Vector& w);

/// s in phi^R(w): ||s|| <= ||w||_p' and 0 <= s <= w, with slack.
bool real_feasible(const Vector& w, const Vector& s, const CanonicalModel& m);

/// Facet mass min{||w||_p', ||w||} kept by an optimal policy.
double facet_budget(const Vector& w, const CanonicalModel& m);

/// Per-coordinate upper bounds x_i / facet_budget(x) of phi^S(x).
Vector sim_action_bounds(const Mixture& x, const CanonicalModel& m);

/// Largest coordinate violation of s against phi^S(x) (0 when feasible),
/// including any deviation of s from the simplex.
double sim_violation(const Mixture& x, const Vector& s, const CanonicalModel& m);

/// ln(||R's|| / ||w||). Returns -infinity when R's = 0.
double reward_real(const Vector& w, const Vector& s, const CanonicalModel& m);

/// ln ||R's|| + ln min{||x||_p', 1}. Throws InfeasibleAction if s is outside
/// phi^S(x) by more than 1e-9.
double reward_sim(const Mixture& x, const Vector& s, const CanonicalModel& m);

struct PerronPair {
    double rho = 0.0;
    Vector vector;  ///< Perron vector scaled onto the simplex.
    std::size_t iterations = 0;
};

/// Perron root and vector of a strictly positive matrix by power iteration
/// from the uniform mixture, to relative tolerance 1e-12.
PerronPair spectral_radius(const Matrix& R, std::size_t max_iterations = 1'000'000);

/// Visits every lattice vector v in Z_+^K with sum(v) = m in lexicographic
/// order (first coordinate ascending, then the second, ...).
void for_each_lattice_point(std::size_t K, std::uint32_t m,
                            const std::function<void(std::span<const std::uint32_t>)>& visit);

/// Number of lattice points C(m+K-1, K-1), saturating at UINT64_MAX.
std::uint64_t lattice_size(std::size_t K, std::uint64_t m);

}  // namespace ratectl
