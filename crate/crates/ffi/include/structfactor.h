#ifndef STRUCTFACTOR_H
#define STRUCTFACTOR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_POINTER = 1,
  SF_STATUS_INVALID_ARGUMENT = 2,
  SF_STATUS_IO = 3,
  SF_STATUS_PARSE = 4,
  SF_STATUS_INSUFFICIENT_SAMPLE = 5,
  SF_STATUS_NUMERIC = 6,
  SF_STATUS_BUFFER_TOO_SMALL = 7,
  SF_STATUS_PANIC = 8,
} SfStatus;

/**
 * Trend, seasonal and irregular components with the selected order.
 */
typedef struct SfDecomposition SfDecomposition;

/**
 * Whitener, loadings, eigenvalues and extracted factors.
 */
typedef struct SfFactorModel SfFactorModel;

/**
 * A validated `p x T` panel.
 */
typedef struct SfPanel SfPanel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *sf_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *sf_version(void);

/**
 * Read a wide CSV panel (time-label column, then one column per series).
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum SfStatus sf_panel_read_csv(const char *path, size_t period, struct SfPanel **out);

/**
 * Build a panel from `p * t` row-major values (row `i` = series `i`).
 *
 * # Safety
 * `values` must point to `p * t` doubles; `out` must be writable.
 */
enum SfStatus sf_panel_from_values(const double *values,
                                   size_t p,
                                   size_t t,
                                   size_t period,
                                   struct SfPanel **out);

/**
 * Number of series, or 0 for a null handle.
 *
 * # Safety
 * `panel` must be null or a live handle.
 */
size_t sf_panel_n_series(const struct SfPanel *panel);

/**
 * Number of time points, or 0 for a null handle.
 *
 * # Safety
 * `panel` must be null or a live handle.
 */
size_t sf_panel_len(const struct SfPanel *panel);

/**
 * # Safety
 * `panel` must be null or a handle not yet freed.
 */
void sf_panel_free(struct SfPanel *panel);

/**
 * Fit trend and seasonal parts. Negative `k` or `d` means "select by BIC"
 * (over `0..=ceil(s/2)-1` harmonics and degrees `0..=2`).
 *
 * # Safety
 * `panel` must be a live handle; `out` must be writable.
 */
enum SfStatus sf_decompose(const struct SfPanel *panel,
                           int64_t k,
                           int64_t d,
                           struct SfDecomposition **out);

/**
 * Selected number of harmonic pairs and trend degree.
 *
 * # Safety
 * `dec` must be a live handle; `k` and `d` must be writable.
 */
enum SfStatus sf_decomposition_order(const struct SfDecomposition *dec, size_t *k, size_t *d);

/**
 * Copy the `p x T` irregular component into `buf` (row-major).
 *
 * # Safety
 * `dec` must be a live handle; `buf` must hold `len` doubles.
 */
enum SfStatus sf_decomposition_irregular(const struct SfDecomposition *dec,
                                         double *buf,
                                         size_t len);

/**
 * Copy the `p x (d+1+2k)` coefficient matrix into `buf` (row-major).
 *
 * # Safety
 * `dec` must be a live handle; `buf` must hold `len` doubles.
 */
enum SfStatus sf_decomposition_theta(const struct SfDecomposition *dec, double *buf, size_t len);

/**
 * # Safety
 * `dec` must be null or a handle not yet freed.
 */
void sf_decomposition_free(struct SfDecomposition *dec);

/**
 * Canonical-correlation factor analysis of the irregular component with
 * `m` lags. A negative `r` selects the factor count by the sequential
 * test at level `alpha`.
 *
 * # Safety
 * `dec` must be a live handle; `out` must be writable.
 */
enum SfStatus sf_factors(const struct SfDecomposition *dec,
                         size_t m,
                         double alpha,
                         int64_t r,
                         struct SfFactorModel **out);

/**
 * Number of factors, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t sf_factor_model_r(const struct SfFactorModel *model);

/**
 * Copy the `p x r` factor loadings into `buf` (row-major).
 *
 * # Safety
 * `model` must be a live handle; `buf` must hold `len` doubles.
 */
enum SfStatus sf_factor_model_loadings(const struct SfFactorModel *model, double *buf, size_t len);

/**
 * Copy the `p` squared canonical correlations (descending) into `buf`.
 *
 * # Safety
 * `model` must be a live handle; `buf` must hold `len` doubles.
 */
enum SfStatus sf_factor_model_eigenvalues(const struct SfFactorModel *model,
                                          double *buf,
                                          size_t len);

/**
 * Copy the `r x T` factor series into `buf` (row-major).
 *
 * # Safety
 * `model` must be a live handle; `buf` must hold `len` doubles.
 */
enum SfStatus sf_factor_model_factors(const struct SfFactorModel *model, double *buf, size_t len);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void sf_factor_model_free(struct SfFactorModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STRUCTFACTOR_H */
