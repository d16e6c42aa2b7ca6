// Only the public C header and the shared library.
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include <json.hpp>

#include "ratectl/ratectl.h"

using nlohmann::json;

namespace {

std::string slurp(const std::string& name) {
    std::ifstream in(std::string(RATECTL_FIXTURE_DIR) + "/" + name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Model {
    rc_model* p = nullptr;
    explicit Model(const std::string& fixture) { REQUIRE(rc_model_from_json(slurp(fixture).c_str(), &p) == RC_OK); }
    ~Model() { rc_model_free(p); }
};

std::string take(char* s) {
    std::string out = s ? s : "";
    rc_string_free(s);
    return out;
}

}  // namespace

TEST_CASE("version and null handling") {
    CHECK(std::strlen(rc_version()) > 0);
    rc_model* m = nullptr;
    CHECK(rc_model_from_json(nullptr, &m) == RC_INVALID_INPUT);
    CHECK(std::strlen(rc_last_error()) > 0);
    CHECK(rc_model_dim(nullptr) == 0);
    rc_model_free(nullptr);
    rc_solution_free(nullptr);
    rc_string_free(nullptr);
}

TEST_CASE("model creation and validation") {
    const double R[] = {0.75, 0.4674, 1.2864, 0.9258};
    const double ones[] = {1, 1};
    rc_model* m = nullptr;
    REQUIRE(rc_model_create(2, R, ones, ones, 0.8, &m) == RC_OK);
    CHECK(rc_model_dim(m) == 2);
    CHECK(rc_model_beta(m) == 0.8);
    CHECK(rc_model_set_beta(m, 1.5) == RC_INVALID_INPUT);
    CHECK(rc_model_beta(m) == 0.8);
    CHECK(rc_model_set_beta(m, 0.5) == RC_OK);

    char* text = nullptr;
    REQUIRE(rc_model_to_json(m, &text) == RC_OK);
    const json j = json::parse(take(text));
    CHECK(j["R"][1][0] == 1.2864);
    CHECK(j["beta"] == 0.5);
    rc_model_free(m);

    const double bad[] = {1, -1, 1, 1};
    rc_model* n = nullptr;
    CHECK(rc_model_create(2, bad, ones, ones, 0.8, &n) == RC_INVALID_INPUT);
    CHECK(n == nullptr);
    CHECK(std::string(rc_last_error()).size() > 0);
    CHECK(rc_model_from_json("{\"R\": [[1,2],[3,4]], \"extra\": 1}", &n) == RC_INVALID_INPUT);
    CHECK(rc_model_from_json("not json", &n) == RC_INVALID_INPUT);
}

TEST_CASE("optimize through the C surface") {
    Model cancer("cancer.json");
    rc_solution* sol = nullptr;
    REQUIRE(rc_optimize(cancer.p, RC_METHOD_AUTO, 200, &sol) == RC_OK);
    CHECK(std::abs(rc_solution_kappa(sol) - 1.3416544159115646) < 1e-9);
    CHECK(rc_solution_alpha(sol) == doctest::Approx(std::log(rc_solution_kappa(sol))));
    double x[2], s[2];
    REQUIRE(rc_solution_mixture(sol, x, 2) == RC_OK);
    REQUIRE(rc_solution_subpopulation(sol, s, 2) == RC_OK);
    CHECK(std::abs(x[0] - 0.35306967647942267) < 1e-9);
    CHECK(std::abs(s[0] - 0.4413370955992783) < 1e-9);
    CHECK(rc_solution_mixture(sol, x, 3) == RC_INVALID_INPUT);
    double fp = -1, feas = -1;
    rc_solution_residuals(sol, &fp, &feas);
    CHECK(fp <= 1e-8);
    CHECK(feas <= 1e-8);
    CHECK(rc_solution_verified(sol) == 1);
    char* text = nullptr;
    REQUIRE(rc_solution_to_json(sol, &text) == RC_OK);
    const json j = json::parse(take(text));
    CHECK(j["method"] == "k2-closed-form");
    CHECK(j["verification"]["passed"] == true);
    rc_solution_free(sol);

    rc_solution* gen = nullptr;
    REQUIRE(rc_optimize(cancer.p, RC_METHOD_GENERAL, 200, &gen) == RC_OK);
    CHECK(std::abs(rc_solution_kappa(gen) - 1.3416544159115646) < 1e-6);
    rc_solution_free(gen);

    const double R3[] = {1, 2, 3, 4, 5, 6, 7, 8, 9}, ones[] = {1, 1, 1};
    rc_model* k3 = nullptr;
    REQUIRE(rc_model_create(3, R3, ones, ones, 0.8, &k3) == RC_OK);
    rc_solution* bad = nullptr;
    CHECK(rc_optimize(k3, RC_METHOD_K2, 200, &bad) == RC_INVALID_INPUT);
    rc_model_free(k3);
}

TEST_CASE("spectral radius, uniform rate and thresholds") {
    Model cancer("cancer.json");
    double rho = 0, ku = 0;
    REQUIRE(rc_spectral_radius(cancer.p, &rho) == RC_OK);
    CHECK(std::abs(rho - 1.6182779661164197) < 1e-12);
    REQUIRE(rc_uniform_growth_factor(cancer.p, &ku) == RC_OK);
    CHECK(ku == doctest::Approx(0.8 * rho));

    double b = 0;
    int found = 0;
    REQUIRE(rc_threshold(cancer.p, 1.0, RC_SOLVER_OPTIMAL, 200, &b, &found) == RC_OK);
    CHECK(found == 1);
    CHECK(std::abs(b - 0.5517980) < 1e-6);
    REQUIRE(rc_threshold(cancer.p, 1.0, RC_SOLVER_UNIFORM, 200, &b, &found) == RC_OK);
    CHECK(std::abs(b - 1 / rho) < 1e-6);
    REQUIRE(rc_threshold(cancer.p, 5.0, RC_SOLVER_OPTIMAL, 200, &b, &found) == RC_OK);
    CHECK(found == 0);

    char* text = nullptr;
    REQUIRE(rc_threshold_json(cancer.p, 5.0, RC_SOLVER_OPTIMAL, 200, &text) == RC_OK);
    const json j = json::parse(take(text));
    CHECK(j["result"] == "no-threshold");
    CHECK(j["beta_star"].is_null());
}

TEST_CASE("sweep and simulations") {
    Model cancer("cancer.json");
    char* text = nullptr;
    REQUIRE(rc_sweep_csv(cancer.p, 0.1, 0.9, 5, 200, &text) == RC_OK);
    const std::string csv = take(text);
    CHECK(csv.rfind("beta,kappa_opt,kappa_uniform,gain,", 0) == 0);
    CHECK(rc_sweep_csv(cancer.p, 0.9, 0.1, 5, 200, &text) == RC_INVALID_INPUT);

    REQUIRE(rc_simulate_det_csv(cancer.p, RC_POLICY_OPTIMAL, 10, nullptr, 200, &text) == RC_OK);
    CHECK(take(text).find('\n') != std::string::npos);

    const int64_t z0[] = {500, 500};
    REQUIRE(rc_simulate_stoch_json(cancer.p, nullptr, RC_POLICY_OPTIMAL, 20, 30, 7, z0, 2, 1, 200, &text) == RC_OK);
    const json rep = json::parse(take(text));
    CHECK(rep["runs"] == 20);
    CHECK(rep["seed"] == 7);
    CHECK(rc_simulate_stoch_json(cancer.p, nullptr, RC_POLICY_OPTIMAL, 20, 30, 7, z0, 3, 1, 200, &text) ==
          RC_INVALID_INPUT);
    CHECK(rc_simulate_stoch_json(cancer.p, "{\"kind\":\"gamma\"}", RC_POLICY_OPTIMAL, 20, 30, 7, z0, 2, 1, 200,
                                 &text) == RC_INVALID_INPUT);

    const double R[] = {0.75, 0.4674, 1.2864, 0.9258}, p[] = {1, 1}, q[] = {2, 1};
    rc_model* scaled = nullptr;
    REQUIRE(rc_model_create(2, R, p, q, 0.8, &scaled) == RC_OK);
    CHECK(rc_simulate_stoch_json(scaled, nullptr, RC_POLICY_OPTIMAL, 2, 3, 7, z0, 2, 1, 200, &text) ==
          RC_INVALID_INPUT);
    rc_model_free(scaled);
}

TEST_CASE("mdp and capacity") {
    Model cancer("cancer.json");
    char *text = nullptr, *table = nullptr;
    REQUIRE(rc_mdp_json(cancer.p, 200, 0.999, 1e-6, &text, &table) == RC_OK);
    const json j = json::parse(take(text));
    CHECK(std::abs(j["alpha_hat"].get<double>() - std::log(1.3417)) < 1e-2);
    CHECK(!j["fixed_point_candidates"].empty());
    CHECK(take(table).rfind("id,x_1,x_2,value,action,bias", 0) == 0);

    CHECK(rc_mdp_json(cancer.p, 10'000'000, 0.999, 1e-6, &text, nullptr) == RC_CAPACITY);
    CHECK(std::string(rc_last_error()).find("cap") != std::string::npos);
    CHECK(rc_mdp_json(cancer.p, 50, 1.5, 1e-6, &text, nullptr) == RC_INVALID_INPUT);
}

TEST_CASE("kinetics") {
    char* text = nullptr;
    int degenerate = -1;
    REQUIRE(rc_kinetics_json(slurp("cell_cycle_kinetics.json").c_str(), 0.8, &text, &degenerate) == RC_OK);
    CHECK(degenerate == 0);
    const std::string model = take(text);
    rc_model* m = nullptr;
    REQUIRE(rc_model_from_json(model.c_str(), &m) == RC_OK);
    CHECK(rc_model_beta(m) == 0.8);
    rc_model_free(m);

    REQUIRE(rc_kinetics_json("{\"mu\":0.0655,\"gamma\":0.0476,\"period_days\":0}", 1.0, &text, &degenerate) == RC_OK);
    rc_string_free(text);
    CHECK(degenerate == 1);
    CHECK(rc_kinetics_json("{\"mu\":0}", 1.0, &text, &degenerate) == RC_INVALID_INPUT);
}

TEST_CASE("last error is per thread") {
    rc_model* m = nullptr;
    CHECK(rc_model_from_json("{", &m) == RC_INVALID_INPUT);
    const std::string here = rc_last_error();
    std::string there = "unset";
    std::thread([&] { there = rc_last_error(); }).join();
    CHECK(!here.empty());
    CHECK(there.empty());
}
