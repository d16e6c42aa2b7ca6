#include "ratectl/ratectl.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "ratectl/detproc.hpp"
#include "ratectl/io.hpp"
#include "ratectl/mdp.hpp"

struct rc_model {
    ratectl::ModelSpec spec;
};

struct rc_solution {
    ratectl::FixedPointSolution sol;
    ratectl::ResidualReport check;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
rc_status guarded(Fn&& fn) {
    g_last_error.clear();
    try {
        fn();
        return RC_OK;
    } catch (const ratectl::CapacityError& e) {
        g_last_error = e.what();
        return RC_CAPACITY;
    } catch (const ratectl::InvalidInput& e) {
        g_last_error = e.what();
        return RC_INVALID_INPUT;
    } catch (const ratectl::Error& e) {
        g_last_error = e.what();
        return RC_NUMERICAL_FAILURE;
    } catch (const nlohmann::json::exception& e) {
        g_last_error = e.what();
        return RC_INVALID_INPUT;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return RC_CAPACITY;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return RC_NUMERICAL_FAILURE;
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw ratectl::InvalidInput(what);
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.data(), s.size() + 1);
    return out;
}

ratectl::Vector copy_vector(const double* data, std::size_t n) {
    return Eigen::Map<const ratectl::Vector>(data, static_cast<Eigen::Index>(n));
}

ratectl::FixedPointSolution solve_with(const ratectl::CanonicalModel& m, rc_method method, std::size_t resolution) {
    switch (method) {
        case RC_METHOD_AUTO: return ratectl::solve(m, resolution);
        case RC_METHOD_K2: return ratectl::solve_k2(m);
        case RC_METHOD_GENERAL: return ratectl::solve_general(m, resolution);
    }
    throw ratectl::InvalidInput("unknown solve method");
}

}  // namespace

extern "C" {

const char* rc_last_error(void) { return g_last_error.c_str(); }

const char* rc_version(void) { return "1.0.0"; }

void rc_string_free(char* s) { std::free(s); }

rc_status rc_model_create(size_t K, const double* R, const double* p, const double* q, double beta, rc_model** out) {
    return guarded([&] {
        require(out && R && p && q, "null argument");
        require(K >= 2, "model needs K >= 2");
        ratectl::ModelSpec spec;
        spec.R = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            R, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
        spec.p = copy_vector(p, K);
        spec.q = copy_vector(q, K);
        spec.beta = beta;
        ratectl::canonicalize(spec);  // validation only
        *out = new rc_model{std::move(spec)};
    });
}

rc_status rc_model_from_json(const char* json, rc_model** out) {
    return guarded([&] {
        require(json && out, "null argument");
        auto spec = ratectl::model_from_json(ratectl::parse_json(json));
        ratectl::canonicalize(spec);
        *out = new rc_model{std::move(spec)};
    });
}

rc_status rc_model_to_json(const rc_model* model, char** out) {
    return guarded([&] {
        require(model && out, "null argument");
        *out = dup_string(ratectl::model_to_json(model->spec).dump(2) + "\n");
    });
}

size_t rc_model_dim(const rc_model* model) { return model ? model->spec.dim() : 0; }

double rc_model_beta(const rc_model* model) { return model ? model->spec.beta : 0.0; }

rc_status rc_model_set_beta(rc_model* model, double beta) {
    return guarded([&] {
        require(model != nullptr, "null argument");
        ratectl::ModelSpec spec = model->spec;
        spec.beta = beta;
        ratectl::canonicalize(spec);
        model->spec.beta = beta;
    });
}

void rc_model_free(rc_model* model) { delete model; }

rc_status rc_optimize(const rc_model* model, rc_method method, size_t resolution, rc_solution** out) {
    return guarded([&] {
        require(model && out, "null argument");
        const auto m = ratectl::canonicalize(model->spec);
        auto sol = solve_with(m, method, resolution);
        auto check = ratectl::verify_fixed_point(sol, m);
        *out = new rc_solution{std::move(sol), check};
    });
}

double rc_solution_kappa(const rc_solution* sol) { return sol ? sol->sol.kappa_star : 0.0; }

double rc_solution_alpha(const rc_solution* sol) { return sol ? sol->sol.alpha_star : 0.0; }

rc_status rc_solution_mixture(const rc_solution* sol, double* out, size_t n) {
    return guarded([&] {
        require(sol && out, "null argument");
        require(n == sol->sol.x_star.dim(), "buffer length does not match K");
        for (size_t i = 0; i < n; ++i) out[i] = sol->sol.x_star[i];
    });
}

rc_status rc_solution_subpopulation(const rc_solution* sol, double* out, size_t n) {
    return guarded([&] {
        require(sol && out, "null argument");
        require(n == sol->sol.s_star.dim(), "buffer length does not match K");
        for (size_t i = 0; i < n; ++i) out[i] = sol->sol.s_star[i];
    });
}

void rc_solution_residuals(const rc_solution* sol, double* fixed_point, double* feasibility) {
    if (!sol) return;
    if (fixed_point) *fixed_point = sol->sol.residual_fixed_point;
    if (feasibility) *feasibility = sol->sol.residual_feasibility;
}

int rc_solution_verified(const rc_solution* sol) { return sol && sol->check.passed ? 1 : 0; }

rc_status rc_solution_to_json(const rc_solution* sol, char** out) {
    return guarded([&] {
        require(sol && out, "null argument");
        *out = dup_string(ratectl::solution_to_json(sol->sol, sol->check).dump(2) + "\n");
    });
}

void rc_solution_free(rc_solution* sol) { delete sol; }

rc_status rc_spectral_radius(const rc_model* model, double* rho) {
    return guarded([&] {
        require(model && rho, "null argument");
        *rho = ratectl::spectral_radius(ratectl::canonicalize(model->spec).R()).rho;
    });
}

rc_status rc_uniform_growth_factor(const rc_model* model, double* kappa) {
    return guarded([&] {
        require(model && kappa, "null argument");
        *kappa = ratectl::uniform_growth_factor(ratectl::canonicalize(model->spec));
    });
}

rc_status rc_sweep_csv(const rc_model* model, double beta_min, double beta_max, size_t steps, size_t resolution,
                       char** out) {
    return guarded([&] {
        require(model && out, "null argument");
        const auto rows = ratectl::sweep(model->spec, beta_min, beta_max, steps, resolution);
        std::ostringstream os;
        ratectl::write_sweep_csv(os, rows);
        *out = dup_string(os.str());
    });
}

rc_status rc_threshold(const rc_model* model, double target, rc_solver solver, size_t resolution, double* beta_star,
                       int* found) {
    return guarded([&] {
        require(model && beta_star && found, "null argument");
        const auto kind = solver == RC_SOLVER_UNIFORM ? ratectl::ThresholdSolver::Uniform
                                                      : ratectl::ThresholdSolver::Optimal;
        const auto b = ratectl::beta_threshold(model->spec, target, kind, resolution);
        *found = b.has_value() ? 1 : 0;
        *beta_star = b.value_or(0.0);
    });
}

rc_status rc_threshold_json(const rc_model* model, double target, rc_solver solver, size_t resolution, char** out) {
    double beta = 0.0;
    int found = 0;
    const rc_status st = rc_threshold(model, target, solver, resolution, &beta, &found);
    if (st != RC_OK) return st;
    return guarded([&] {
        require(out != nullptr, "null argument");
        ratectl::Json j = {{"solver", solver == RC_SOLVER_UNIFORM ? "uniform" : "optimal"}, {"target", target}};
        if (found) {
            j["result"] = "threshold";
            j["beta_star"] = beta;
            j["extermination_fraction"] = 1.0 - beta;
        } else {
            j["result"] = "no-threshold";
            j["beta_star"] = nullptr;
            j["extermination_fraction"] = nullptr;
        }
        *out = dup_string(j.dump(2) + "\n");
    });
}

rc_status rc_simulate_det_csv(const rc_model* model, rc_policy policy, size_t horizon, const double* w0,
                              size_t resolution, char** out) {
    return guarded([&] {
        require(model && out, "null argument");
        const auto m = ratectl::canonicalize(model->spec);
        const std::size_t K = m.dim();
        const ratectl::Vector start =
            w0 ? copy_vector(w0, K) : ratectl::Vector::Constant(static_cast<Eigen::Index>(K), 1.0 / K);
        ratectl::Policy pol;
        if (policy == RC_POLICY_UNIFORM) {
            pol = ratectl::uniform_policy(m).policy;
        } else {
            const auto sol = ratectl::solve(m, resolution);
            pol = ratectl::mixture_policy(sol.x_star, sol.s_star, m);
        }
        const auto traj = ratectl::rollout(pol, start, horizon, m);
        std::ostringstream os;
        ratectl::write_trajectory_csv(os, traj);
        *out = dup_string(os.str());
    });
}

rc_status rc_simulate_stoch_json(const rc_model* model, const char* offspring_json, rc_policy policy, size_t runs,
                                 size_t horizon, uint64_t seed, const int64_t* z0, size_t K, unsigned threads,
                                 size_t resolution, char** out) {
    return guarded([&] {
        require(model && z0 && out, "null argument");
        require(K == model->spec.dim(), "z0 length does not match K");
        require((model->spec.q.array() == 1.0).all(), "stochastic simulation needs q = (1,...,1)");
        const auto m = ratectl::canonicalize(model->spec);
        const auto offspring = offspring_json
                                   ? ratectl::offspring_from_json(ratectl::parse_json(offspring_json), m.R())
                                   : ratectl::OffspringModel::poisson(m.R());

        ratectl::IntPolicy pol;
        if (policy == RC_POLICY_UNIFORM) {
            pol = ratectl::uniform_int_policy(m);
        } else {
            const auto sol = ratectl::solve(m, resolution);
            pol = [s = sol.s_star, m](const ratectl::IntVector& Z, std::size_t) {
                return ratectl::theorem3_policy(Z, s, m);
            };
        }
        ratectl::MonteCarloConfig cfg;
        cfg.runs = runs;
        cfg.horizon = horizon;
        cfg.z0.assign(z0, z0 + K);
        cfg.base_seed = seed;
        cfg.threads = threads;
        const auto rep = ratectl::monte_carlo(cfg, pol, m, offspring);
        *out = dup_string(ratectl::report_to_json(rep, cfg).dump(2) + "\n");
    });
}

rc_status rc_mdp_json(const rc_model* model, uint32_t grid_m, double gamma, double epsilon, char** out,
                      char** table_csv) {
    return guarded([&] {
        require(model && out, "null argument");
        const auto m = ratectl::canonicalize(model->spec);
        const ratectl::SimplexGrid grid(m.dim(), grid_m);
        ratectl::ValueIterationOptions opts;
        opts.gamma = gamma;
        opts.epsilon = epsilon;
        const auto vt = ratectl::value_iteration(m, grid, opts);
        const std::size_t ref = ratectl::default_reference_point(grid);
        const double alpha = ratectl::estimate_alpha(vt, ref);
        const auto bias = ratectl::extract_bias(vt, ref);
        const auto candidates = ratectl::greedy_fixed_points(vt, m, grid);

        ratectl::Json list = ratectl::Json::array();
        for (const auto& c : candidates)
            list.push_back({{"x", ratectl::to_json(grid.point(c.point))},
                            {"s", ratectl::to_json(grid.point(c.action))},
                            {"growth_factor", c.growth_factor}});
        ratectl::Json j = {
            {"alpha_hat", alpha},
            {"kappa_hat", std::exp(alpha)},
            {"grid_m", grid_m},
            {"gamma", gamma},
            {"epsilon", epsilon},
            {"iterations", vt.iterations},
            {"sup_delta", vt.sup_delta},
            {"reference_point", ratectl::to_json(grid.point(ref))},
            {"bias_max_abs", bias.max_abs},
            {"fixed_point_candidates", list},
        };
        if (table_csv) {
            std::ostringstream os;
            ratectl::write_value_table_csv(os, vt, grid, bias);
            *table_csv = dup_string(os.str());
        }
        *out = dup_string(j.dump(2) + "\n");
    });
}

rc_status rc_kinetics_json(const char* spec_json, double beta, char** out, int* degenerate) {
    return guarded([&] {
        require(spec_json && out, "null argument");
        require(beta > 0.0 && beta <= 1.0, "beta outside (0,1]");
        const auto spec = ratectl::kinetics_from_json(ratectl::parse_json(spec_json));
        const auto disc = ratectl::discretize(ratectl::build_generator(spec), spec.period_days);
        if (degenerate) *degenerate = disc.strictly_positive ? 0 : 1;
        *out = dup_string(ratectl::model_to_json(ratectl::to_model_spec(disc.R, beta)).dump(2) + "\n");
    });
}

}  // extern "C"
