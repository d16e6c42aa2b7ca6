#pragma once

// Active/quiescent cell-cycle kinetics and its discrete-time reproduction
// matrix R = exp(A T).

#include "ratectl/core.hpp"

namespace ratectl {

struct KineticsSpec {
    double mu_rate = 0.0;     // mitosis, per day
    double gamma_rate = 0.0;  // quiescent -> active, per day
    double period_days = 21.0;
};

/// Rates must be positive and finite; the period finite and >= 0 (0 gives
/// the identity, which is not a valid model).
void validate(const KineticsSpec& spec);

/// [[-mu, gamma], [2 mu, -gamma]]
Matrix build_generator(const KineticsSpec& spec);

struct Discretization {
    Matrix R;
    bool series_fallback = false;  ///< eigenvalues too close (or complex)
    bool strictly_positive = false;
};

/// exp(A T) through the 2x2 eigendecomposition V D(T) V^-1; scaling and
/// squaring with a truncated Taylor series for K != 2 or a near-defective A.
Discretization discretize(const Matrix& A, double T);

/// R with p = q = (1,...,1) and the given beta.
ModelSpec to_model_spec(const Matrix& R, double beta = 1.0);

}  // namespace ratectl
