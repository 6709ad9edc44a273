/* C interface to the continuous-fidelity GP library.
 *
 * All functions return CFGP_OK (0) on success or a negative error code; the
 * message for the most recent failure on the calling thread is available
 * from cfgp_last_error().  Objects are opaque handles released with their
 * matching _free function.  Strings returned through char** out-parameters
 * are heap-allocated and must be released with cfgp_string_free().
 *
 * Structured configuration is passed as JSON text; unknown keys are
 * configuration errors.  Matrices cross the boundary as dense row-major
 * arrays.
 */
#ifndef CFGP_H
#define CFGP_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define CFGP_OK 0
#define CFGP_EINVAL (-1)    /* bad argument (null pointer, size mismatch) */
#define CFGP_ECONFIG (-2)   /* invalid or unknown configuration */
#define CFGP_ENUMERIC (-3)  /* numerical failure (factorization, optimizer) */
#define CFGP_ESTATE (-4)    /* operation invalid for the object's state */
#define CFGP_EIO (-5)       /* file or serialization failure */
#define CFGP_EINTERNAL (-6) /* unexpected internal error */

const char* cfgp_version(void);
const char* cfgp_last_error(void);
void cfgp_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

typedef struct cfgp_dataset cfgp_dataset;

/* X: n*d, T: n*m, y: n, all row-major.  Inputs must lie in [0,1]^d and
 * fidelities must be strictly positive. */
int cfgp_dataset_create(const double* X, const double* T, const double* y, int n, int d,
                        int m, cfgp_dataset** out);
int cfgp_dataset_dims(const cfgp_dataset* data, int* n, int* d, int* m);
/* Buffers sized n*d, n*m, n; any may be NULL to skip. */
int cfgp_dataset_get(const cfgp_dataset* data, double* X, double* T, double* y);
void cfgp_dataset_free(cfgp_dataset* data);

/* ---- designs ----------------------------------------------------------- */

typedef struct cfgp_design cfgp_design;

/* config: {"design": {kind, d, m, t_lo, t_hi, seed, budget | n/n0/levels/
 *   stack_size/reps_per_loc/n_loc}, "cost": {kind, ...}} */
int cfgp_design_generate(const char* config_json, cfgp_design** out);
int cfgp_design_dims(const cfgp_design* des, int* n, int* d, int* m);
int cfgp_design_get(const cfgp_design* des, double* X, double* T);
/* notice receives a heap string (possibly empty); may be NULL to skip. */
int cfgp_design_info(const cfgp_design* des, double* total_cost, char** notice);
void cfgp_design_free(cfgp_design* des);

/* ---- model fitting and prediction -------------------------------------- */

typedef struct cfgp_model cfgp_model;

/* fit config: {"basis": {...}, "fit": {...}} — see README for the schema.
 * report_json (optional) receives the full multi-start fit report. */
int cfgp_fit(const cfgp_dataset* data, const char* config_json, cfgp_model** out,
             char** report_json);
/* Build a model at explicit hyperparameters instead of fitting:
 * {"basis": {...}, "params": {sigma2?, phi1, phi2, family1, family2, a,
 * gamma, l}}.  Omitting sigma2 profiles it from the data. */
int cfgp_model_create(const cfgp_dataset* data, const char* config_json,
                      cfgp_model** out);
/* x: n_points*d, t: n_points*m row-major; mean/var: n_points outputs
 * (var may be NULL).  t may contain zeros: that is the exact surface. */
int cfgp_model_predict(const cfgp_model* model, const double* x, const double* t,
                       int n_points, double* mean, double* var);
int cfgp_model_params_json(const cfgp_model* model, char** json);
void cfgp_model_free(cfgp_model* model);

/* ---- IMSPE ------------------------------------------------------------- */

typedef struct cfgp_imspe cfgp_imspe;

int cfgp_imspe_state_create(const cfgp_model* model, cfgp_imspe** out);
int cfgp_imspe_value(const cfgp_imspe* state, double* value);
/* IMSPE reduction from appending (x, t).  degenerate (may be NULL) is set
 * to 1 when the candidate duplicates the design, in which case reduction
 * is -inf. */
int cfgp_imspe_reduction(const cfgp_imspe* state, const double* x, const double* t,
                         double* reduction, int* degenerate);
/* options: {"t_lo": [...], "t_hi": [...], "seed": ..., "n_probes": ...,
 * "n_starts": ..., "max_iters": ...}; result JSON carries x, t, reduction,
 * cost, value. */
int cfgp_optimize_criterion(const cfgp_imspe* state, const char* cost_json,
                            const char* options_json, char** result_json);
void cfgp_imspe_free(cfgp_imspe* state);

/* ---- simulators and costs ---------------------------------------------- */

typedef struct cfgp_simulator cfgp_simulator;

int cfgp_simulator_create(const char* config_json, cfgp_simulator** out);
int cfgp_simulator_dims(const cfgp_simulator* sim, int* d, int* m);
int cfgp_simulator_eval(const cfgp_simulator* sim, const double* x, const double* t,
                        double* y);
void cfgp_simulator_free(cfgp_simulator* sim);

int cfgp_cost_eval(const char* cost_json, const double* t, int m, double* out);

/* ---- experiments -------------------------------------------------------- */

typedef struct {
  int iteration;
  const double* x;
  int d;
  const double* t;
  int m;
  double criterion_value;
  double reduction;
  double cost;
  double cum_cost;
  double loglik;
  double rmse; /* NaN when no evaluation grid is configured */
  int refitted;
} cfgp_al_row;

typedef void (*cfgp_al_row_cb)(const cfgp_al_row* row, void* user);

/* Runs an experiment described by config_json: mode "al", "one_shot" or
 * "single_fidelity".  The callback (optional) streams one row per
 * acquisition for active-learning runs.  summary_json and final_data are
 * optional outputs. */
int cfgp_run_experiment(const char* config_json, cfgp_al_row_cb on_row, void* user,
                        char** summary_json, cfgp_dataset** final_data);

/* ---- validation --------------------------------------------------------- */

/* Runs every integral check against the adaptive-quadrature oracle.
 * perturb != 0 injects a deliberate fault to prove sensitivity.  all_pass
 * receives 1/0; report_text a human-readable table. */
int cfgp_validate_integrals(uint64_t seed, int draws_per_family, int perturb,
                            char** report_text, int* all_pass);

int cfgp_rmse(const double* predictions, const double* truths, int n, double* out);

#ifdef __cplusplus
}
#endif

#endif /* CFGP_H */
