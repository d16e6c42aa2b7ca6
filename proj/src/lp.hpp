#pragma once

// Small dense linear programs: minimize c'x subject to Ax = b, x >= 0.
// Two-phase tableau simplex with Bland's rule; meant for a handful of
// variables, not for scale.

#include <optional>

#include "ratectl/core.hpp"

namespace ratectl::lp {

struct Solution {
    Vector x;
    double objective = 0.0;
};

/// std::nullopt when infeasible. Unbounded problems throw NumericalFailure.
std::optional<Solution> minimize(const Matrix& A, const Vector& b, const Vector& c, double tol = 1e-11);

}  // namespace ratectl::lp
