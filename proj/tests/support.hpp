#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sys/wait.h>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "ratectl/core.hpp"
#include "ratectl/io.hpp"
#include "ratectl/stochastic.hpp"

namespace testing {

inline const std::string kFixtures = RATECTL_FIXTURE_DIR;

inline ratectl::ModelSpec fixture_model(const std::string& name, double beta) {
    std::ifstream in(kFixtures + "/" + name);
    std::stringstream ss;
    ss << in.rdbuf();
    auto spec = ratectl::model_from_json(ratectl::parse_json(ss.str()));
    spec.beta = beta;
    return spec;
}

inline ratectl::CanonicalModel cancer(double beta) { return ratectl::canonicalize(fixture_model("cancer.json", beta)); }
inline ratectl::CanonicalModel blog(double beta) { return ratectl::canonicalize(fixture_model("blogosphere.json", beta)); }

inline ratectl::Vector vec(std::initializer_list<double> v) {
    ratectl::Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

inline ratectl::Matrix mat2(double a, double b, double c, double d) {
    ratectl::Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

// Column sums 1, so every feasible pair has SIM reward 0.
inline ratectl::CanonicalModel zero_reward_model() {
    return ratectl::CanonicalModel(ratectl::Matrix::Constant(2, 2, 0.5), vec({1.0, 1.0}));
}

inline ratectl::Matrix random_positive(std::mt19937_64& rng, Eigen::Index K, double lo = 0.1, double hi = 3.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    ratectl::Matrix m(K, K);
    for (Eigen::Index i = 0; i < K; ++i)
        for (Eigen::Index j = 0; j < K; ++j) m(i, j) = u(rng);
    return m;
}

struct RandomPair {
    ratectl::Vector w, s;
};

// s drawn inside phi^R(w) for the given p'.
inline RandomPair feasible_pair(std::mt19937_64& rng, const ratectl::Vector& p) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto K = p.size();
    ratectl::Vector w(K), s(K);
    for (Eigen::Index i = 0; i < K; ++i) w[i] = 10.0 * u(rng);
    for (Eigen::Index i = 0; i < K; ++i) s[i] = u(rng) * w[i];
    const double budget = w.dot(p);
    if (s.sum() > budget) s *= budget / s.sum();
    s *= u(rng);
    return {w, s};
}

// Brute force over every breakpoint of k -> ceil(k s*) with s* = (a/b, 1 - a/b)
// and p' = (pa/10, pb/10), all in integer arithmetic. Returns ceil(kbar s*).
inline ratectl::IntVector brute_kbar(std::int64_t Z1, std::int64_t Z2, std::int64_t a, std::int64_t b,
                                     std::int64_t pa, std::int64_t pb) {
    auto ceil_div = [](std::int64_t x, std::int64_t y) { return (x + y - 1) / y; };
    auto feasible = [&](std::int64_t S1, std::int64_t S2) {
        return S1 <= Z1 && S2 <= Z2 && 10 * (S1 + S2) <= pa * Z1 + pb * Z2;
    };
    // k = num/den, kept as a fraction for exact comparison
    std::int64_t best_num = 0, best_den = 1;
    ratectl::IntVector best{0, 0};
    for (std::int64_t n = 1; n <= 31; ++n) {
        if (a > 0) {  // k = n b / a, S1 = n
            const std::int64_t S2 = ceil_div(n * (b - a), a);
            if (feasible(n, S2) && n * b * best_den > best_num * a) {
                best_num = n * b, best_den = a;
                best = {n, S2};
            }
        }
        if (b - a > 0) {  // k = n b / (b - a), S2 = n
            const std::int64_t S1 = ceil_div(n * a, b - a);
            if (feasible(S1, n) && n * b * best_den > best_num * (b - a)) {
                best_num = n * b, best_den = b - a;
                best = {S1, n};
            }
        }
    }
    return best;
}

// Runs a shell command, captures stdout, returns the exit status.
inline int run(const std::string& cmd, std::string* out = nullptr) {
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return -1;
    std::string text;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) text.append(buf, n);
    const int status = pclose(pipe);
    if (out) *out = std::move(text);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace testing
