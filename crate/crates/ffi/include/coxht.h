#ifndef COXHT_H
#define COXHT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every API call.
 */
typedef enum {
  COX_STATUS_OK = 0,
  COX_STATUS_NULL_POINTER = 1,
  COX_STATUS_INVALID_ARGUMENT = 2,
  COX_STATUS_NO_EVENTS = 3,
  COX_STATUS_SINGULAR_INFORMATION = 4,
  COX_STATUS_DID_NOT_CONVERGE = 5,
  COX_STATUS_NUMERICAL_FAILURE = 6,
  COX_STATUS_INTERNAL_ERROR = 7,
} CoxStatus;

/**
 * Opaque survival dataset: covariates, event times and indicators,
 * pre-sorted for likelihood evaluation.
 */
typedef struct CoxDataset CoxDataset;

/**
 * Opaque fit result.
 */
typedef struct CoxFit CoxFit;

/**
 * Scalar outputs of the state-equation solver.
 */
typedef struct {
  double a_star;
  double b_star;
  double r_star;
  double v_star;
  double saddle_value;
  bool converged;
} CoxStateResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static C string.
 */
const char *coxht_version(void);

/**
 * Create a dataset from row-major covariates `x` (n rows, p columns),
 * event times `y` and indicators `delta` (0 censored, 1 event).
 *
 * # Safety
 * `x` must point to `n * p` doubles, `y` and `delta` to `n` elements, and
 * `out` must be a valid pointer.
 */
CoxStatus coxht_dataset_new(uintptr_t n,
                            uintptr_t p,
                            const double *x,
                            const double *y,
                            const uint8_t *delta,
                            CoxDataset **out);

/**
 * Free a dataset handle. Null is ignored.
 *
 * # Safety
 * `ds` must be null or a pointer returned by `coxht_dataset_new`.
 */
void coxht_dataset_free(CoxDataset *ds);

/**
 * Maximize the partial likelihood. On success `out` owns a new fit handle.
 *
 * # Safety
 * `ds` and `out` must be valid pointers.
 */
CoxStatus coxht_fit(const CoxDataset *ds, double tol, uintptr_t max_iter, CoxFit **out);

/**
 * Number of coefficients in a fit.
 *
 * # Safety
 * `fit` must be a valid fit handle.
 */
uintptr_t coxht_fit_dim(const CoxFit *fit);

/**
 * Copy the fitted coefficients into `buf` (capacity `len`).
 *
 * # Safety
 * `fit` must be valid and `buf` must point to at least `len` doubles.
 */
CoxStatus coxht_fit_beta(const CoxFit *fit, double *buf, uintptr_t len);

/**
 * Final log partial likelihood of a fit.
 *
 * # Safety
 * `fit` must be a valid fit handle.
 */
double coxht_fit_loglik(const CoxFit *fit);

/**
 * Whether the Newton iteration converged.
 *
 * # Safety
 * `fit` must be a valid fit handle.
 */
bool coxht_fit_converged(const CoxFit *fit);

/**
 * Whether the iterates diverged (the finite-sample symptom of
 * nonexistence).
 *
 * # Safety
 * `fit` must be a valid fit handle.
 */
bool coxht_fit_diverged(const CoxFit *fit);

/**
 * Free a fit handle. Null is ignored.
 *
 * # Safety
 * `fit` must be null or a pointer returned by `coxht_fit`.
 */
void coxht_fit_free(CoxFit *fit);

/**
 * Finite-sample existence verdict: `exists` is nonzero when the reduced
 * constraint LP has optimum at most `tol`; `lp_value` and the constraint
 * row count are reported alongside.
 *
 * # Safety
 * `ds` must be valid; out-pointers must be valid or null.
 */
CoxStatus coxht_exists(const CoxDataset *ds,
                       double tol,
                       int32_t *exists,
                       double *lp_value,
                       uintptr_t *rows);

/**
 * Monte Carlo estimate of the existence boundary value at one signal
 * strength, with standard error.
 */
CoxStatus coxht_boundary_point(double kappa,
                               double lambda,
                               double censor_lo,
                               double censor_hi,
                               uintptr_t n,
                               uintptr_t reps,
                               uint64_t seed,
                               double *delta_hat,
                               double *stderr);

/**
 * Solve the state equations at (kappa, delta) under a constant baseline
 * hazard and uniform censoring.
 */
CoxStatus coxht_solve_state(double kappa,
                            double delta,
                            double lambda,
                            double censor_lo,
                            double censor_hi,
                            uintptr_t n_rep,
                            uint64_t seed,
                            CoxStateResult *out);

/**
 * Two-sided corrected p-value `2 Phi(-|beta_j / b_star|)`.
 */
CoxStatus coxht_corrected_pvalue(double beta_j, double b_star, double *out);

/**
 * Wald chi-square test over `len` null coordinates.
 *
 * # Safety
 * `values` must point to `len` doubles.
 */
CoxStatus coxht_wald_chi2(const double *values,
                          uintptr_t len,
                          double b_star,
                          double *statistic,
                          double *p_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COXHT_H */
