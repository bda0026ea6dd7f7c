/* adaptsurv: survival-trial simulation, Cox score evaluation, information-time
 * rescaling and group-sequential monitoring, exposed as a C API over the C++
 * core. All functions return as_status; details of the most recent failure on
 * the calling thread are available via as_last_error(). Strings returned
 * through char** are heap-allocated and must be released with as_string_free().
 */
#ifndef ADAPTSURV_H
#define ADAPTSURV_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum as_status {
  AS_OK = 0,
  AS_ERR_PARSE = 1,
  AS_ERR_VALIDATION = 2,
  AS_ERR_IO = 3,
  AS_ERR_SCHEDULE_EXCEEDS_HORIZON = 4,
  AS_ERR_ALLOCATION_HISTORY = 5,
  AS_ERR_EMPTY_RISK_SET = 6,
  AS_ERR_INFORMATION_NOT_REACHED = 7,
  AS_ERR_NO_EVENTS = 8,
  AS_ERR_SINGULAR_INFORMATION = 9,
  AS_ERR_NOT_CONVERGED = 10,
  AS_ERR_MINIMUM_INFORMATION = 11,
  AS_ERR_QUADRATURE = 12,
  AS_ERR_INSUFFICIENT_REPLICATES = 13,
  AS_ERR_DIMENSION = 14,
  AS_ERR_USAGE = 15,
  AS_ERR_INTERNAL = 16
} as_status;

/* Risk-set conventions for two-parameter score evaluations. */
#define AS_VARIANT_FULL_RISKSET 0
#define AS_VARIANT_SUBSAMPLE_RISKSET 1

/* Spending functions. */
#define AS_SPENDING_OBRIEN_FLEMING 0
#define AS_SPENDING_POCOCK 1
#define AS_SPENDING_LINEAR 2

typedef struct as_config as_config; /* parsed configuration document */
typedef struct as_trial as_trial;   /* trial data plus optional allocation log */

const char* as_version(void);
const char* as_status_name(as_status s);
/* Message for the most recent failure on this thread ("" when none). */
const char* as_last_error(void);

void as_string_free(char* s);

as_status as_config_parse(const char* text, as_config** out);
void as_config_free(as_config* c);
as_status as_config_seed(const as_config* c, uint64_t* out);

/* Simulation. as_simulate uses the config seed; _seeded overrides it. */
as_status as_simulate(const as_config* c, as_trial** out);
as_status as_simulate_seeded(const as_config* c, uint64_t seed, as_trial** out);
void as_trial_free(as_trial* t);

as_status as_trial_from_csv(const char* csv_text, as_trial** out);
as_status as_trial_to_csv(const as_trial* t, char** out_csv);
/* Only available for simulated trials. */
as_status as_trial_allocation_log_csv(const as_trial* t, char** out_csv);
as_status as_trial_subject_count(const as_trial* t, int* out);
as_status as_trial_covariate_dim(const as_trial* t, int* out);

/* Score process, log partial likelihood, observed information and the
 * information estimator at (beta, time, entry_cutoff), serialized as JSON. */
as_status as_score(const as_trial* t, const double* beta, int dim, double time,
                   double entry_cutoff, int variant, char** out_json);

/* Maximum partial likelihood estimation (JSON result). */
as_status as_estimate(const as_trial* t, double time, double entry_cutoff, const double* init,
                      int dim, double tol, int max_iter, char** out_json);
as_status as_estimate_at_fraction(const as_trial* t, double fraction, double planned_information,
                                  double ref_beta, double tol, int max_iter, char** out_json);

/* Group-sequential critical values for equally spaced looks (CSV). */
as_status as_boundaries(double alpha, int looks, int spending, int two_sided, char** out_csv);

/* Sequential decisions for a trial under the plan in the config (CSV). */
as_status as_monitor(const as_trial* t, const as_config* plan, char** out_csv);

/* Monte Carlo diagnostics under the config (JSON report). */
as_status as_validate(const as_config* c, int replicates, int threads, char** out_json);

/* Full subcommand dispatch, identical to the adaptsurv CLI.
 * Returns the process exit code: 0 success, 1 domain error, 2 usage error. */
int as_run(int argc, const char* const* argv);

#ifdef __cplusplus
}
#endif
#endif /* ADAPTSURV_H */
