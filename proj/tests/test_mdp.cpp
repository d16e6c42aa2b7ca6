#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "ratectl/errors.hpp"
#include "ratectl/mdp.hpp"
#include "ratectl/optimizer.hpp"
#include "support.hpp"

using namespace ratectl;
using testing::vec;

namespace {

// m = 2000 tables are the slow part; share them.
const ValueTable& cancer_table(double beta) {
    static std::vector<std::pair<double, ValueTable>> cache;
    for (const auto& [b, vt] : cache)
        if (b == beta) return vt;
    static const SimplexGrid grid(2, 2000);
    cache.emplace_back(beta, value_iteration(testing::cancer(beta), grid));
    return cache.back().second;
}

const SimplexGrid& grid2000() {
    static const SimplexGrid g(2, 2000);
    return g;
}

double lattice_distance(const SimplexGrid& grid, std::size_t a, std::size_t b) {
    const auto u = grid.lattice(a), v = grid.lattice(b);
    double d = 0;
    for (std::size_t i = 0; i < u.size(); ++i) d = std::max(d, std::abs(double(u[i]) - double(v[i])));
    return d / grid.denominator();
}

}  // namespace

TEST_CASE("grid enumeration") {
    SimplexGrid g(2, 4);
    REQUIRE(g.size() == 5);
    const std::array<double, 5> first{0, 0.25, 0.5, 0.75, 1};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(g.point(i)[0] == first[i]);
        CHECK(g.point(i)[1] == 1 - first[i]);
    }
    CHECK(SimplexGrid(3, 2).size() == 6);
    CHECK(SimplexGrid(2, 2000).size() == 2001);
    CHECK(SimplexGrid(4, 10).size() == 286);
}

TEST_CASE("grid rank is the inverse of enumeration") {
    for (auto [K, m] : {std::pair{2, 7}, {3, 9}, {4, 6}, {5, 5}}) {
        SimplexGrid g(K, m);
        CHECK(g.size() == lattice_size(K, m));
        for (std::size_t id = 0; id < g.size(); ++id) {
            const auto v = g.lattice(id);
            CHECK(std::accumulate(v.begin(), v.end(), 0u) == unsigned(m));
            CHECK(g.index_of(v) == id);
            if (id > 0) CHECK(std::lexicographical_compare(g.lattice(id - 1).begin(), g.lattice(id - 1).end(), v.begin(), v.end()));
        }
    }
    SimplexGrid g(3, 4);
    const std::array<std::uint32_t, 3> off{1, 1, 1};
    CHECK_THROWS_AS(g.index_of(off), InvalidInput);
}

TEST_CASE("nearest grid point") {
    SimplexGrid g(2, 4);
    CHECK(g.nearest(vec({0.3, 0.7})) == 1);
    CHECK(g.nearest(vec({0.9, 0.1})) == 4);
    // exact tie between 1/4 and 1/2 goes to the larger first coordinate
    CHECK(g.nearest(vec({0.375, 0.625})) == 2);

    SimplexGrid g3(3, 10);
    std::mt19937_64 rng(5);
    std::gamma_distribution<double> gam(1.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const Vector x = normalize(vec({gam(rng), gam(rng), gam(rng)})).values();
        const std::size_t n = g3.nearest(x);
        const double best = (g3.point(n) - x).lpNorm<1>();
        for (std::size_t id = 0; id < g3.size(); ++id) CHECK(best <= (g3.point(id) - x).lpNorm<1>() + 1e-12);
    }
}

TEST_CASE("grid preconditions and capacity") {
    CHECK_THROWS_AS(SimplexGrid(1, 10), InvalidInput);
    CHECK_THROWS_AS(SimplexGrid(3, 0), InvalidInput);
    CHECK_THROWS_AS(SimplexGrid(2, 10'000'000), CapacityError);
    CHECK_THROWS_AS(SimplexGrid(4, 400), CapacityError);  // C(403,3) > 5e6
    CHECK_NOTHROW(SimplexGrid(3, 100, 6000));
    CHECK_THROWS_AS(SimplexGrid(3, 100, 5000), CapacityError);
}

TEST_CASE("zero-reward model has V = 0") {
    const auto m = testing::zero_reward_model();
    SimplexGrid g(2, 50);
    const auto vt = value_iteration(m, g);
    for (double v : vt.values) CHECK(std::abs(v) < 1e-12);
    CHECK(std::abs(estimate_alpha(vt, default_reference_point(g))) < 1e-12);
    const auto b = extract_bias(vt, default_reference_point(g));
    CHECK(b.max_abs < 1e-12);

    // every successor is the centre, so exactly the points within 1/m of it
    const auto c = greedy_fixed_points(vt, m, g);
    const std::size_t centre = g.nearest(vec({0.5, 0.5}));
    REQUIRE(c.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(c[k].point == centre - 1 + k);
        CHECK(c[k].successor == centre);
    }
}

TEST_CASE("value iteration matches the closed form at m = 2000") {
    const auto& g = grid2000();
    const auto ref = default_reference_point(g);
    CHECK(g.point(ref)[0] == 0.5);

    SUBCASE("cancer 0.8") {
        CHECK(std::abs(estimate_alpha(cancer_table(0.8), ref) - std::log(1.3417)) < 5e-3);
        CHECK(std::abs(estimate_alpha(cancer_table(0.8), ref) - 0.2939) < 5e-3);
    }
    SUBCASE("cancer 0.3") { CHECK(std::abs(estimate_alpha(cancer_table(0.3), ref) - std::log(0.6109)) < 5e-3); }
    SUBCASE("cancer at the threshold") { CHECK(std::abs(estimate_alpha(cancer_table(0.5518), ref)) < 5e-3); }
    SUBCASE("blog 0.5") {
        const auto vt = value_iteration(testing::blog(0.5), g);
        CHECK(std::abs(estimate_alpha(vt, ref) - std::log(0.5 * 167)) < 5e-3);
    }
}

TEST_CASE("oracle agreement with solve_k2") {
    const auto& g = grid2000();
    const auto ref = default_reference_point(g);
    for (double beta : {0.3, 0.55, 0.8}) {
        CAPTURE(beta);
        CHECK(std::abs(estimate_alpha(cancer_table(beta), ref) - solve_k2(testing::cancer(beta)).alpha_star) <= 5e-3);
        const auto vt = value_iteration(testing::blog(beta), g);
        CHECK(std::abs(estimate_alpha(vt, ref) - solve_k2(testing::blog(beta)).alpha_star) <= 5e-3);
    }
}

TEST_CASE("sweeps contract") {
    const auto& vt = cancer_table(0.8);
    REQUIRE(vt.delta_history.size() == vt.iterations);
    for (std::size_t i = 1; i < vt.delta_history.size(); ++i) CHECK(vt.delta_history[i] <= vt.delta_history[i - 1]);
    CHECK(vt.sup_delta <= 1e-6 * (1 - 0.999) / (2 * 0.999));
}

TEST_CASE("Bellman residual after convergence") {
    for (double beta : {0.3, 0.8, 1.0}) {
        CAPTURE(beta);
        const auto m = testing::cancer(beta);
        SimplexGrid g(2, 150);
        ValueIterationOptions opts;
        opts.gamma = 0.99;
        const auto vt = value_iteration(m, g, opts);
        CHECK(bellman_residual(vt, m, g) <= opts.epsilon);
    }
    const auto m = canonicalize({testing::mat2(1.2, 0.4, 0.7, 1.1), vec({0.9, 0.6}), vec({1, 1}), 0.7});
    SimplexGrid g(2, 120);
    const auto vt = value_iteration(m, g);
    CHECK(bellman_residual(vt, m, g) <= 1e-6);
}

TEST_CASE("bias table") {
    const auto& g = grid2000();
    const auto ref = default_reference_point(g);
    const auto b = extract_bias(cancer_table(0.8), ref);
    CHECK(b.g[ref] == 0.0);
    CHECK(std::isfinite(b.max_abs));
    double worst = 0;
    for (std::size_t i = 1; i + 1 < b.g.size(); ++i) worst = std::max(worst, b.g[i + 1] - 2 * b.g[i] + b.g[i - 1]);
    CHECK(worst <= 1e-3);
}

TEST_CASE("discrete concavity across models") {
    for (double beta : {0.3, 0.55}) {
        const auto b = extract_bias(cancer_table(beta), default_reference_point(grid2000()));
        double worst = 0;
        for (std::size_t i = 1; i + 1 < b.g.size(); ++i) worst = std::max(worst, b.g[i + 1] - 2 * b.g[i] + b.g[i - 1]);
        CHECK(worst <= 1e-3);
    }
}

TEST_CASE("greedy fixed points") {
    const auto& g = grid2000();
    const auto m = testing::cancer(0.8);
    const auto c = greedy_fixed_points(cancer_table(0.8), m, g);
    REQUIRE(!c.empty());
    const bool near = std::any_of(c.begin(), c.end(), [&](const auto& f) {
        return std::abs(g.point(f.point)[0] - 0.3531) <= 2.0 / 2000;
    });
    CHECK(near);
    for (const auto& f : c) CHECK(lattice_distance(g, f.point, f.successor) <= 1.0 / 2000 + 1e-15);

    const auto sol = oracle_solution(c, m, g);
    CHECK(sol.method == SolveMethod::MdpOracle);
    CHECK(std::abs(sol.x_star[0] - 0.3531) <= 2.0 / 2000);
    CHECK(std::abs(sol.kappa_star - 1.3417) < 5e-3);

    CHECK_THROWS_AS(oracle_solution({}, m, g), NumericalFailure);
}

TEST_CASE("beta = 1 fixes the Perron vector") {
    SimplexGrid g(2, 400);
    for (const auto& m : {testing::cancer(1.0), testing::blog(1.0)}) {
        const auto vt = value_iteration(m, g);
        const auto c = greedy_fixed_points(vt, m, g);
        const Vector perron = spectral_radius(m.R()).vector;
        const bool near = std::any_of(c.begin(), c.end(), [&](const auto& f) {
            return std::abs(g.point(f.point)[0] - perron[0]) <= 2.0 / 400;
        });
        CHECK(near);
    }
}

TEST_CASE("grid refinement convergence") {
    const auto m = testing::cancer(0.8);
    const double target = std::log(solve_k2(m).kappa_star);
    std::vector<double> err;
    for (std::uint32_t gm : {500u, 1000u, 2000u}) {
        SimplexGrid g(2, gm);
        err.push_back(std::abs(estimate_alpha(value_iteration(m, g), default_reference_point(g)) - target));
    }
    CAPTURE(err[0]);
    CAPTURE(err[1]);
    CAPTURE(err[2]);
    CHECK(err[1] <= err[0]);
    CHECK(err[2] <= err[1]);
}

TEST_CASE("three types on a small grid") {
    std::mt19937_64 rng(17);
    const auto R = testing::random_positive(rng, 3, 0.3, 1.5);
    const auto m = canonicalize({R, vec({0.8, 0.7, 1.2}), vec({1, 1, 1}), 0.75});
    SimplexGrid g(3, 40);
    const auto vt = value_iteration(m, g);
    CHECK(vt.values.size() == g.size());
    CHECK(bellman_residual(vt, m, g) <= 1e-6);
    const double a = estimate_alpha(vt, default_reference_point(g));
    CHECK(std::abs(a - solve_general(m, 100).alpha_star) < 0.03);
}

TEST_CASE("value table CSV") {
    const auto m = testing::cancer(0.8);
    SimplexGrid g(2, 10);
    const auto vt = value_iteration(m, g);
    const auto b = extract_bias(vt, default_reference_point(g));
    std::ostringstream os;
    write_value_table_csv(os, vt, g, b);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "id,x_1,x_2,value,action,bias");
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 11);
}
