#include "ratectl/kinetics.hpp"

#include <cmath>

namespace ratectl {

namespace {

constexpr double kEigenGap = 1e-10;

Matrix series_exp(const Matrix& A, double T) {
    const Matrix X = A * T;
    const double norm = X.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const Matrix Y = X / std::ldexp(1.0, squarings);

    const auto n = A.rows();
    Matrix sum = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k < 64; ++k) {
        term = term * Y / static_cast<double>(k);
        sum += term;
        if (term.cwiseAbs().maxCoeff() <= 1e-17 * sum.cwiseAbs().maxCoeff()) break;
    }
    for (int i = 0; i < squarings; ++i) sum = sum * sum;
    return sum;
}

}  // namespace

void validate(const KineticsSpec& spec) {
    if (!(std::isfinite(spec.mu_rate) && spec.mu_rate > 0.0)) throw InvalidInput("kinetics: mu must be positive");
    if (!(std::isfinite(spec.gamma_rate) && spec.gamma_rate > 0.0)) throw InvalidInput("kinetics: gamma must be positive");
    if (!(std::isfinite(spec.period_days) && spec.period_days >= 0.0))
        throw InvalidInput("kinetics: period_days must be finite and nonnegative");
}

Matrix build_generator(const KineticsSpec& spec) {
    validate(spec);
    Matrix A(2, 2);
    A << -spec.mu_rate, spec.gamma_rate, 2.0 * spec.mu_rate, -spec.gamma_rate;
    return A;
}

Discretization discretize(const Matrix& A, double T) {
    if (A.rows() != A.cols() || A.rows() < 1) throw InvalidInput("discretize: generator must be square");
    if (!A.allFinite()) throw InvalidInput("discretize: generator has non-finite entries");
    if (!(std::isfinite(T) && T >= 0.0)) throw InvalidInput("discretize: period must be finite and nonnegative");

    Discretization out;
    bool closed_form = false;
    if (A.rows() == 2) {
        const double a = A(0, 0), b = A(0, 1), c = A(1, 0), d = A(1, 1);
        const double h = 0.25 * (a - d) * (a - d) + b * c;
        if (h > 0.0 && 2.0 * std::sqrt(h) >= kEigenGap) {
            const double mid = 0.5 * (a + d), r = std::sqrt(h);
            const double lambda[2] = {mid + r, mid - r};
            Matrix V(2, 2);
            for (int k = 0; k < 2; ++k) {
                // (A - lambda I) v = 0 from either row; keep the better scaled one
                Vector v1(2), v2(2);
                v1 << b, lambda[k] - a;
                v2 << lambda[k] - d, c;
                V.col(k) = v1.norm() >= v2.norm() ? v1 : v2;
            }
            const Eigen::Vector2d dT(std::exp(lambda[0] * T), std::exp(lambda[1] * T));
            out.R = V * dT.asDiagonal() * V.inverse();
            closed_form = out.R.allFinite();
        }
    }
    if (!closed_form) {
        out.R = series_exp(A, T);
        out.series_fallback = true;
    }
    if (!out.R.allFinite()) throw NumericalFailure("discretize: matrix exponential overflowed");
    out.strictly_positive = (out.R.array() > 0.0).all();
    return out;
}

ModelSpec to_model_spec(const Matrix& R, double beta) {
    ModelSpec spec;
    spec.R = R;
    spec.p = Vector::Ones(R.rows());
    spec.q = Vector::Ones(R.rows());
    spec.beta = beta;
    return spec;
}

}  // namespace ratectl
