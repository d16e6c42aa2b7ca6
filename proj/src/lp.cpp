#include "lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace ratectl::lp {

namespace {

class Tableau {
public:
    // rows 0..m-1 constraints, row m objective; last column rhs
    Tableau(const Matrix& A, const Vector& b) : m_(A.rows()), n_(A.cols()), t_(m_ + 1, n_ + m_ + 1) {
        t_.setZero();
        basis_.resize(static_cast<std::size_t>(m_));
        for (Eigen::Index i = 0; i < m_; ++i) {
            const double sign = b[i] < 0.0 ? -1.0 : 1.0;
            t_.row(i).head(n_) = sign * A.row(i);
            t_(i, n_ + i) = 1.0;
            t_(i, n_ + m_) = sign * b[i];
            basis_[static_cast<std::size_t>(i)] = n_ + i;
        }
    }

    Eigen::Index rows() const { return m_; }
    Eigen::Index structural() const { return n_; }
    double& rhs(Eigen::Index i) { return t_(i, n_ + m_); }
    double objective() const { return -t_(m_, n_ + m_); }

    // objective row from a cost vector over all columns
    void set_cost(const Vector& cost) {
        t_.row(m_).setZero();
        t_.row(m_).head(cost.size()) = cost.transpose();
        for (Eigen::Index i = 0; i < m_; ++i) {
            const double cb = t_(m_, basis_[static_cast<std::size_t>(i)]);
            if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
        }
    }

    // Returns false if unbounded.
    bool optimize(Eigen::Index allowed_columns, double tol) {
        for (int guard = 0; guard < 100000; ++guard) {
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < allowed_columns; ++j)
                if (t_(m_, j) < -tol) {
                    enter = j;
                    break;
                }
            if (enter < 0) return true;
            Eigen::Index leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < m_; ++i) {
                const double a = t_(i, enter);
                if (a <= tol) continue;
                const double ratio = t_(i, n_ + m_) / a;
                if (ratio < best - tol ||
                    (std::abs(ratio - best) <= tol && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
        throw NumericalFailure("simplex iteration limit reached");
    }

    void pivot(Eigen::Index r, Eigen::Index c) {
        t_.row(r) /= t_(r, c);
        for (Eigen::Index i = 0; i <= m_; ++i)
            if (i != r && t_(i, c) != 0.0) t_.row(i) -= t_(i, c) * t_.row(r);
        basis_[static_cast<std::size_t>(r)] = c;
    }

    Eigen::Index basic(Eigen::Index i) const { return basis_[static_cast<std::size_t>(i)]; }
    double entry(Eigen::Index i, Eigen::Index j) const { return t_(i, j); }

    Vector primal() const {
        Vector x = Vector::Zero(n_);
        for (Eigen::Index i = 0; i < m_; ++i)
            if (basic(i) < n_) x[basic(i)] = std::max(0.0, t_(i, n_ + m_));
        return x;
    }

private:
    Eigen::Index m_, n_;
    Matrix t_;
    std::vector<Eigen::Index> basis_;
};

}  // namespace

std::optional<Solution> minimize(const Matrix& A, const Vector& b, const Vector& c, double tol) {
    if (A.rows() != b.size() || A.cols() != c.size()) throw InvalidInput("lp: dimension mismatch");
    Tableau tab(A, b);
    const Eigen::Index n = tab.structural(), m = tab.rows();
    const double scale = 1.0 + b.cwiseAbs().maxCoeff();

    // phase 1: drive the artificials to zero
    Vector phase1 = Vector::Zero(n + m);
    phase1.tail(m).setOnes();
    tab.set_cost(phase1);
    tab.optimize(n + m, tol);
    if (tab.objective() > tol * scale) return std::nullopt;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (tab.basic(i) < n) continue;
        for (Eigen::Index j = 0; j < n; ++j)
            if (std::abs(tab.entry(i, j)) > tol) {
                tab.pivot(i, j);
                break;
            }
    }

    Vector cost = Vector::Zero(n + m);
    cost.head(n) = c;
    tab.set_cost(cost);
    if (!tab.optimize(n, tol)) throw NumericalFailure("lp: objective unbounded");
    Solution sol;
    sol.x = tab.primal();
    sol.objective = c.dot(sol.x);
    return sol;
}

}  // namespace ratectl::lp
