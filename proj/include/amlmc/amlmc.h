/* C interface to the antithetic multilevel Monte Carlo engine.
 *
 * All handles are opaque and owned by the caller; release them with the
 * matching *_destroy function. Every fallible call returns an amlmc_status;
 * on failure amlmc_last_error() describes the problem (per thread, valid
 * until the next failing call on that thread). */
#ifndef AMLMC_AMLMC_H
#define AMLMC_AMLMC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(AMLMC_BUILDING)
#    define AMLMC_API __declspec(dllexport)
#  else
#    define AMLMC_API __declspec(dllimport)
#  endif
#else
#  define AMLMC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum amlmc_status {
  AMLMC_OK = 0,
  AMLMC_ERR_INVALID_ARGUMENT = 1,
  AMLMC_ERR_CONFIG = 2,
  AMLMC_ERR_MODEL_EVALUATION = 3,
  AMLMC_ERR_DIVERGENCE = 4,
  AMLMC_ERR_INSUFFICIENT_DATA = 5,
  AMLMC_ERR_NONCONVERGENCE = 6,
  AMLMC_ERR_VALIDATION = 7,
  AMLMC_ERR_IO = 8,
  AMLMC_ERR_INTERNAL = 9
} amlmc_status;

typedef enum amlmc_scheme {
  AMLMC_SCHEME_ANTITHETIC_MILSTEIN = 0,
  AMLMC_SCHEME_EULER_COUPLED = 1
} amlmc_scheme;

typedef struct amlmc_model amlmc_model;
typedef struct amlmc_payoff amlmc_payoff;
typedef struct amlmc_result amlmc_result;
typedef struct amlmc_config amlmc_config;
typedef struct amlmc_report amlmc_report;

AMLMC_API const char* amlmc_last_error(void);
AMLMC_API const char* amlmc_status_name(amlmc_status status);

/* Process exit code for a status: 0 ok, 1 usage, 2 validation failure,
 * 3 non-convergence, 4 divergence. */
AMLMC_API int amlmc_exit_code(amlmc_status status);

/* Built-in models and payoffs. `params` is NULL or "key=value;key=value"
 * with comma-separated vectors, e.g. "sigma=0.2,0.3;rho=0.5". */
AMLMC_API amlmc_status amlmc_model_create(const char* name, const char* params,
                                          amlmc_model** out);
AMLMC_API void amlmc_model_destroy(amlmc_model* model);
AMLMC_API size_t amlmc_model_state_dim(const amlmc_model* model);
AMLMC_API size_t amlmc_model_noise_dim(const amlmc_model* model);

AMLMC_API amlmc_status amlmc_payoff_create(const char* name, const char* params,
                                           amlmc_payoff** out);
AMLMC_API void amlmc_payoff_destroy(amlmc_payoff* payoff);

typedef struct amlmc_options {
  uint64_t seed;
  size_t base_steps; /* N0, steps at level 0 */
  double horizon;
  amlmc_scheme scheme;
  unsigned workers;
} amlmc_options;

AMLMC_API void amlmc_options_default(amlmc_options* options);

AMLMC_API amlmc_status amlmc_run_fixed(const amlmc_model* model, const amlmc_payoff* payoff,
                                       const amlmc_options* options, const int* levels,
                                       const uint64_t* samples, size_t count,
                                       amlmc_result** out);

/* A run that reaches max_level without meeting the bias test still returns
 * AMLMC_OK; check amlmc_result_converged. */
AMLMC_API amlmc_status amlmc_run_adaptive(const amlmc_model* model, const amlmc_payoff* payoff,
                                          const amlmc_options* options, double epsilon,
                                          uint64_t initial_samples, int max_level,
                                          amlmc_result** out);

typedef struct amlmc_level_stats {
  int level;
  uint64_t n_samples;
  double dt;
  double mean_y;
  double var_y;
  double mean_p;
  double var_p;
  double cost_per_sample;
  double kurtosis; /* NaN when unavailable */
} amlmc_level_stats;

AMLMC_API double amlmc_result_estimate(const amlmc_result* result);
AMLMC_API double amlmc_result_std_error(const amlmc_result* result);
AMLMC_API double amlmc_result_total_cost(const amlmc_result* result);
AMLMC_API int amlmc_result_final_level(const amlmc_result* result);
AMLMC_API int amlmc_result_converged(const amlmc_result* result);
AMLMC_API const char* amlmc_result_diagnostic(const amlmc_result* result);
AMLMC_API size_t amlmc_result_level_count(const amlmc_result* result);
AMLMC_API amlmc_status amlmc_result_level(const amlmc_result* result, size_t index,
                                          amlmc_level_stats* out);
/* AMLMC_ERR_INSUFFICIENT_DATA when fewer than three levels >= 1 were run. */
AMLMC_API amlmc_status amlmc_result_rates(const amlmc_result* result, double* alpha,
                                          double* beta, double* gamma);
AMLMC_API void amlmc_result_destroy(amlmc_result* result);

/* Experiment configuration: an optional config file plus flag overrides
 * (flag names as on the command line, without dashes). */
AMLMC_API amlmc_status amlmc_config_create(amlmc_config** out);
AMLMC_API amlmc_status amlmc_config_set_file(amlmc_config* config, const char* path);
AMLMC_API amlmc_status amlmc_config_set(amlmc_config* config, const char* key,
                                        const char* value);
/* Resolves file and flags; reports the first invalid key. */
AMLMC_API amlmc_status amlmc_config_resolve(amlmc_config* config);
/* Resolved configuration text; NULL before a successful resolve. */
AMLMC_API const char* amlmc_config_text(const amlmc_config* config);
AMLMC_API void amlmc_config_destroy(amlmc_config* config);

/* Resolves (if needed) and runs the experiment. A report is produced whenever
 * the run completes, including failed validation and non-convergence. */
AMLMC_API amlmc_status amlmc_experiment_run(amlmc_config* config, amlmc_report** out);
AMLMC_API const char* amlmc_report_summary(const amlmc_report* report);
AMLMC_API int amlmc_report_exit_code(const amlmc_report* report);
AMLMC_API size_t amlmc_report_file_count(const amlmc_report* report);
AMLMC_API const char* amlmc_report_file(const amlmc_report* report, size_t index);
AMLMC_API void amlmc_report_destroy(amlmc_report* report);

#ifdef __cplusplus
}
#endif

#endif
