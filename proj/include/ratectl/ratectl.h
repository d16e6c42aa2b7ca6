#ifndef RATECTL_RATECTL_H
#define RATECTL_RATECTL_H

/* C interface to the ratectl library. Every function returning rc_status
 * leaves a message for rc_last_error() (per thread) when it fails. Strings
 * handed out through char** parameters are owned by the caller and must be
 * released with rc_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(RATECTL_BUILDING_LIBRARY)
#define RC_API __attribute__((visibility("default")))
#else
#define RC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct rc_model rc_model;
typedef struct rc_solution rc_solution;

typedef enum rc_status {
    RC_OK = 0,
    RC_INVALID_INPUT = 2,
    RC_NUMERICAL_FAILURE = 3, /* also: a policy left the feasible set */
    RC_CAPACITY = 4
} rc_status;

typedef enum rc_method { RC_METHOD_AUTO = 0, RC_METHOD_K2 = 1, RC_METHOD_GENERAL = 2 } rc_method;
typedef enum rc_solver { RC_SOLVER_OPTIMAL = 0, RC_SOLVER_UNIFORM = 1 } rc_solver;
typedef enum rc_policy { RC_POLICY_OPTIMAL = 0, RC_POLICY_UNIFORM = 1 } rc_policy;

RC_API const char* rc_last_error(void);
RC_API const char* rc_version(void);
RC_API void rc_string_free(char* s);

/* R is row-major K x K. */
RC_API rc_status rc_model_create(size_t K, const double* R, const double* p, const double* q, double beta,
                                 rc_model** out);
RC_API rc_status rc_model_from_json(const char* json, rc_model** out);
RC_API rc_status rc_model_to_json(const rc_model* model, char** out);
RC_API size_t rc_model_dim(const rc_model* model);
RC_API double rc_model_beta(const rc_model* model);
RC_API rc_status rc_model_set_beta(rc_model* model, double beta);
RC_API void rc_model_free(rc_model* model);

/* resolution is the lattice denominator of the general solver. */
RC_API rc_status rc_optimize(const rc_model* model, rc_method method, size_t resolution, rc_solution** out);
RC_API double rc_solution_kappa(const rc_solution* sol);
RC_API double rc_solution_alpha(const rc_solution* sol);
RC_API rc_status rc_solution_mixture(const rc_solution* sol, double* out, size_t n);
RC_API rc_status rc_solution_subpopulation(const rc_solution* sol, double* out, size_t n);
RC_API void rc_solution_residuals(const rc_solution* sol, double* fixed_point, double* feasibility);
RC_API int rc_solution_verified(const rc_solution* sol);
RC_API rc_status rc_solution_to_json(const rc_solution* sol, char** out);
RC_API void rc_solution_free(rc_solution* sol);

/* Spectral radius of the canonical matrix. */
RC_API rc_status rc_spectral_radius(const rc_model* model, double* rho);
RC_API rc_status rc_uniform_growth_factor(const rc_model* model, double* kappa);

RC_API rc_status rc_sweep_csv(const rc_model* model, double beta_min, double beta_max, size_t steps,
                              size_t resolution, char** out);

/* *found is 0 when even beta = 1 misses the target. */
RC_API rc_status rc_threshold(const rc_model* model, double target, rc_solver solver, size_t resolution,
                              double* beta_star, int* found);
RC_API rc_status rc_threshold_json(const rc_model* model, double target, rc_solver solver, size_t resolution,
                                   char** out);

/* Deterministic rollout as CSV. w0 may be NULL (uniform mixture). */
RC_API rc_status rc_simulate_det_csv(const rc_model* model, rc_policy policy, size_t horizon, const double* w0,
                                     size_t resolution, char** out);

/* Monte Carlo report as JSON. offspring_json may be NULL (Poisson). The
 * model must have q = (1,...,1). */
RC_API rc_status rc_simulate_stoch_json(const rc_model* model, const char* offspring_json, rc_policy policy,
                                        size_t runs, size_t horizon, uint64_t seed, const int64_t* z0, size_t K,
                                        unsigned threads, size_t resolution, char** out);

/* Value-iteration oracle. table_csv may be NULL; otherwise receives the
 * per-grid-point dump. */
RC_API rc_status rc_mdp_json(const rc_model* model, uint32_t grid_m, double gamma, double epsilon, char** out,
                             char** table_csv);

/* Kinetics spec JSON in, model JSON out. *degenerate is set when the result
 * is not strictly positive (e.g. period 0). */
RC_API rc_status rc_kinetics_json(const char* spec_json, double beta, char** out, int* degenerate);

#ifdef __cplusplus
}
#endif

#endif
