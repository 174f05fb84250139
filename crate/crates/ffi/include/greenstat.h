#ifndef GREENSTAT_H
#define GREENSTAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  GS_STATUS_OK = 0,
  GS_STATUS_NULL_POINTER = 1,
  GS_STATUS_INVALID_UTF8 = 2,
  GS_STATUS_IO = 3,
  GS_STATUS_PARSE = 4,
  GS_STATUS_SCHEMA = 5,
  GS_STATUS_VALIDATION = 6,
  GS_STATUS_INSUFFICIENT_DATA = 7,
  GS_STATUS_DOMAIN = 8,
  GS_STATUS_NUMERIC = 9,
  GS_STATUS_UNDEFINED_CORRELATION = 10,
  GS_STATUS_GROUPING = 11,
  GS_STATUS_COLLINEARITY = 12,
  GS_STATUS_MISSING_INPUT = 13,
  GS_STATUS_BUFFER_TOO_SMALL = 14,
  GS_STATUS_PANIC = 15,
} GsStatus;

/**
 * Levene centering: 0 mean, 1 median, 2 median with adjusted df,
 * 3 trimmed mean.
 */
typedef enum {
  GS_LEVENE_VARIANT_MEAN = 0,
  GS_LEVENE_VARIANT_MEDIAN = 1,
  GS_LEVENE_VARIANT_MEDIAN_ADJUSTED_DF = 2,
  GS_LEVENE_VARIANT_TRIMMED_MEAN = 3,
} GsLeveneVariant;

/**
 * Opaque dataset handle.
 */
typedef struct GsDataset GsDataset;

/**
 * Opaque fitted-model handle; holds the stepwise history when produced
 * by `gs_stepwise_forward`.
 */
typedef struct GsFit GsFit;

/**
 * Descriptive summary. `skewness` and `se_skewness` are NaN when the
 * corresponding `has_` flag is 0.
 */
typedef struct {
  size_t n;
  double mean;
  double se_mean;
  double median;
  double mode;
  double sd;
  double variance;
  int32_t has_skewness;
  double skewness;
  int32_t has_se_skewness;
  double se_skewness;
  double range;
  double min;
  double max;
  double trimmed_mean;
} GsSummary;

typedef struct {
  double r;
  size_t n;
  double p_two_tailed;
} GsCorrelation;

typedef struct {
  double statistic;
  double df1;
  double df2;
  double p;
} GsTestResult;

typedef struct {
  size_t rows_in;
  size_t rows_out;
  size_t dropped_missing;
  size_t dropped_out_of_range;
  size_t dropped_outlier;
} GsCleaningCounts;

typedef struct {
  size_t n;
  size_t n_predictors;
  double r;
  double r2;
  double adj_r2;
  double see;
} GsFitStats;

/**
 * One coefficient row; `beta` is NaN for the intercept.
 */
typedef struct {
  double b;
  double se_b;
  double beta;
  double t;
  double p;
} GsCoefficient;

typedef struct {
  double r;
  double r2;
  double adj_r2;
  double see;
  double r2_change;
  double f_change;
  size_t df1;
  size_t df2;
  double sig_f_change;
} GsStep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. Owned by the
 * library; valid until the next failing call on the same thread.
 */
const char *gs_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gs_version(void);

GsStatus gs_ln_gamma(double x, double *out);

GsStatus gs_reg_inc_beta(double a, double b, double x, double *out);

GsStatus gs_t_two_tailed_p(double t, double df, double *out);

GsStatus gs_f_upper_p(double f, double df1, double df2, double *out);

GsStatus gs_summarize(const double *values, size_t n, GsSummary *out);

GsStatus gs_pearson(const double *x, const double *y, size_t n, GsCorrelation *out);

GsStatus gs_levene(const double *values,
                   const size_t *group_ids,
                   size_t n,
                   GsLeveneVariant variant,
                   GsTestResult *out);

GsStatus gs_anova(const double *values, const size_t *group_ids, size_t n, GsTestResult *out);

/**
 * Loads a CSV file in the default seven-column schema.
 */
GsStatus gs_dataset_load_path(const char *path, GsDataset **out);

/**
 * Loads CSV text from a byte buffer.
 */
GsStatus gs_dataset_load_csv(const uint8_t *data, size_t len, GsDataset **out);

GsStatus gs_dataset_row_count(const GsDataset *d, size_t *out);

/**
 * Copies a column into `buf` (missing cells as NaN). `*len` receives the
 * row count; fails with `GS_STATUS_BUFFER_TOO_SMALL` if `cap` is less.
 */
GsStatus gs_dataset_column(const GsDataset *d,
                           const char *name,
                           double *buf,
                           size_t cap,
                           size_t *len);

/**
 * Cleans with the default ranges. `tukey_k <= 0` disables outlier
 * removal. `counts` may be NULL.
 */
GsStatus gs_dataset_clean(const GsDataset *d,
                          double tukey_k,
                          GsDataset **out,
                          GsCleaningCounts *counts);

void gs_dataset_free(GsDataset *d);

/**
 * OLS of `response` on `k` predictors plus intercept.
 */
GsStatus gs_ols_fit(const GsDataset *d,
                    const char *response,
                    const char *const *predictors,
                    size_t k,
                    GsFit **out);

/**
 * Forward stepwise selection; the handle holds the final model. Fails
 * with `GS_STATUS_VALIDATION` if no candidate meets `p_enter`.
 */
GsStatus gs_stepwise_forward(const GsDataset *d,
                             const char *response,
                             const char *const *candidates,
                             size_t k,
                             double p_enter,
                             GsFit **out);

GsStatus gs_fit_stats(const GsFit *f, GsFitStats *out);

/**
 * Coefficient `i`, where 0 is the intercept and `i` in 1..=n_predictors
 * follows the entry order.
 */
GsStatus gs_fit_coefficient(const GsFit *f, size_t i, GsCoefficient *out);

/**
 * Name of term `i` ("(Constant)" for 0); owned by the handle. NULL if
 * out of range.
 */
const char *gs_fit_term_name(const GsFit *f, size_t i);

/**
 * Number of stepwise steps; 0 for a direct OLS fit.
 */
GsStatus gs_fit_step_count(const GsFit *f, size_t *out);

GsStatus gs_fit_step(const GsFit *f, size_t i, GsStep *out);

/**
 * Prediction from predictor values given in term order (1..=k).
 */
GsStatus gs_fit_predict(const GsFit *f, const double *x, size_t k, double *out);

void gs_fit_free(GsFit *f);

/**
 * Evaluates `pv_model_4` or `load_model_2` on named inputs.
 */
GsStatus gs_predict_published(const char *model,
                              const char *const *names,
                              const double *values,
                              size_t n,
                              double *out);

/**
 * Intercept of a published model.
 */
GsStatus gs_published_intercept(const char *model, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GREENSTAT_H */
