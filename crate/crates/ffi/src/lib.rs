//! C ABI over the greenstat engine.
//!
//! Conventions:
//! * every function returns a [`GsStatus`]; results go through out-pointers;
//! * on failure the message is available from [`gs_last_error_message`]
//!   on the same thread until the next failing call;
//! * datasets and fits are opaque handles released with their `_free`
//!   function; passing NULL to a `_free` function is a no-op;
//! * panics never cross the boundary and surface as `GS_STATUS_PANIC`.
//!
//! Safety contract shared by every `unsafe` entry point: pointer arguments
//! are NULL or valid for the stated length, strings are NUL-terminated,
//! and handles come from this library and are not used after `_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use greenstat::dataset::{clean, default_schema, load_csv, load_csv_path, Dataset, OutlierRule, RangeSpec};
use greenstat::descriptive::summarize;
use greenstat::inference::{anova_oneway, levene, pearson, GroupedSeries, LeveneVariant};
use greenstat::regression::{
    ols_fit, predict, stepwise_forward, ModelSummaryRow, OlsFit, Predictor, PublishedModel,
};
use greenstat::special::{f_upper_p, ln_gamma, reg_inc_beta, t_two_tailed_p};
use greenstat::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Schema = 5,
    Validation = 6,
    InsufficientData = 7,
    Domain = 8,
    Numeric = 9,
    UndefinedCorrelation = 10,
    Grouping = 11,
    Collinearity = 12,
    MissingInput = 13,
    BufferTooSmall = 14,
    Panic = 15,
}

impl From<&Error> for GsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } => GsStatus::Parse,
            Error::Schema(_) => GsStatus::Schema,
            Error::Validation(_) => GsStatus::Validation,
            Error::InsufficientData { .. } => GsStatus::InsufficientData,
            Error::Domain(_) => GsStatus::Domain,
            Error::Numeric(_) => GsStatus::Numeric,
            Error::UndefinedCorrelation(_) => GsStatus::UndefinedCorrelation,
            Error::Grouping(_) => GsStatus::Grouping,
            Error::Collinearity(_) => GsStatus::Collinearity,
            Error::MissingInput(_) => GsStatus::MissingInput,
            Error::Io(_) => GsStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(GsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(GsStatus::from(&e), e.to_string())
    }
}

type FfiResult = Result<(), Failure>;

fn guard(f: impl FnOnce() -> FfiResult) -> GsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(GsStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(GsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn names_arg<'a>(p: *const *const c_char, n: usize, what: &str) -> Result<Vec<&'a str>, Failure> {
    slice_arg(p, n, what)?
        .iter()
        .map(|&s| str_arg(s, what))
        .collect()
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failure on this thread, or NULL. Owned by the
/// library; valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------- special

#[no_mangle]
pub unsafe extern "C" fn gs_ln_gamma(x: f64, out: *mut f64) -> GsStatus {
    guard(|| {
        *out_arg(out, "out")? = ln_gamma(x)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gs_reg_inc_beta(a: f64, b: f64, x: f64, out: *mut f64) -> GsStatus {
    guard(|| {
        *out_arg(out, "out")? = reg_inc_beta(a, b, x)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gs_t_two_tailed_p(t: f64, df: f64, out: *mut f64) -> GsStatus {
    guard(|| {
        *out_arg(out, "out")? = t_two_tailed_p(t, df)?.value;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gs_f_upper_p(f: f64, df1: f64, df2: f64, out: *mut f64) -> GsStatus {
    guard(|| {
        *out_arg(out, "out")? = f_upper_p(f, df1, df2)?.value;
        Ok(())
    })
}

// ------------------------------------------------------------ descriptive

/// Descriptive summary. `skewness` and `se_skewness` are NaN when the
/// corresponding `has_` flag is 0.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsSummary {
    pub n: usize,
    pub mean: f64,
    pub se_mean: f64,
    pub median: f64,
    pub mode: f64,
    pub sd: f64,
    pub variance: f64,
    pub has_skewness: i32,
    pub skewness: f64,
    pub has_se_skewness: i32,
    pub se_skewness: f64,
    pub range: f64,
    pub min: f64,
    pub max: f64,
    pub trimmed_mean: f64,
}

#[no_mangle]
pub unsafe extern "C" fn gs_summarize(values: *const f64, n: usize, out: *mut GsSummary) -> GsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = summarize(slice_arg(values, n, "values")?)?;
        *out = GsSummary {
            n: s.n,
            mean: s.mean,
            se_mean: s.se_mean,
            median: s.median,
            mode: s.mode,
            sd: s.sd,
            variance: s.variance,
            has_skewness: s.skewness.is_some() as i32,
            skewness: s.skewness.unwrap_or(f64::NAN),
            has_se_skewness: s.se_skewness.is_some() as i32,
            se_skewness: s.se_skewness.unwrap_or(f64::NAN),
            range: s.range,
            min: s.min,
            max: s.max,
            trimmed_mean: s.trimmed_mean,
        };
        Ok(())
    })
}

// -------------------------------------------------------------- inference

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsCorrelation {
    pub r: f64,
    pub n: usize,
    pub p_two_tailed: f64,
}

#[no_mangle]
pub unsafe extern "C" fn gs_pearson(x: *const f64, y: *const f64, n: usize, out: *mut GsCorrelation) -> GsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let c = pearson(slice_arg(x, n, "x")?, slice_arg(y, n, "y")?)?;
        *out = GsCorrelation {
            r: c.r,
            n: c.n,
            p_two_tailed: c.p_two_tailed.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Levene centering: 0 mean, 1 median, 2 median with adjusted df,
/// 3 trimmed mean.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsLeveneVariant {
    Mean = 0,
    Median = 1,
    MedianAdjustedDf = 2,
    TrimmedMean = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsTestResult {
    pub statistic: f64,
    pub df1: f64,
    pub df2: f64,
    pub p: f64,
}

/// Groups are the distinct ids in ascending order.
fn grouped(values: &[f64], ids: &[usize]) -> Result<GroupedSeries, Failure> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (&v, &id) in values.iter().zip(ids) {
        groups.entry(id).or_default().push(v);
    }
    Ok(GroupedSeries::from_values(groups.into_values().collect())?)
}

#[no_mangle]
pub unsafe extern "C" fn gs_levene(
    values: *const f64,
    group_ids: *const usize,
    n: usize,
    variant: GsLeveneVariant,
    out: *mut GsTestResult,
) -> GsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let g = grouped(slice_arg(values, n, "values")?, slice_arg(group_ids, n, "group_ids")?)?;
        let variant = match variant {
            GsLeveneVariant::Mean => LeveneVariant::Mean,
            GsLeveneVariant::Median => LeveneVariant::Median,
            GsLeveneVariant::MedianAdjustedDf => LeveneVariant::MedianAdjustedDf,
            GsLeveneVariant::TrimmedMean => LeveneVariant::TrimmedMean,
        };
        let r = levene(&g, variant)?;
        *out = GsTestResult {
            statistic: r.statistic,
            df1: r.df1 as f64,
            df2: r.df2,
            p: r.p,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gs_anova(
    values: *const f64,
    group_ids: *const usize,
    n: usize,
    out: *mut GsTestResult,
) -> GsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let g = grouped(slice_arg(values, n, "values")?, slice_arg(group_ids, n, "group_ids")?)?;
        let a = anova_oneway(&g)?;
        *out = GsTestResult {
            statistic: a.f,
            df1: a.df1 as f64,
            df2: a.df2 as f64,
            p: a.p,
        };
        Ok(())
    })
}

// ---------------------------------------------------------------- dataset

/// Opaque dataset handle.
pub struct GsDataset(Dataset);

unsafe fn give<T>(out: *mut *mut T, value: T) -> FfiResult {
    *out_arg(out, "out")? = Box::into_raw(Box::new(value));
    Ok(())
}

/// Loads a CSV file in the default seven-column schema.
#[no_mangle]
pub unsafe extern "C" fn gs_dataset_load_path(path: *const c_char, out: *mut *mut GsDataset) -> GsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        give(out, GsDataset(load_csv_path(path, &default_schema())?))
    })
}

/// Loads CSV text from a byte buffer.
#[no_mangle]
pub unsafe extern "C" fn gs_dataset_load_csv(data: *const u8, len: usize, out: *mut *mut GsDataset) -> GsStatus {
    guard(|| {
        let bytes = slice_arg(data, len, "data")?;
        give(out, GsDataset(load_csv(bytes, &default_schema())?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn gs_dataset_row_count(d: *const GsDataset, out: *mut usize) -> GsStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("dataset"))?;
        *out_arg(out, "out")? = d.0.row_count();
        Ok(())
    })
}

/// Copies a column into `buf` (missing cells as NaN). `*len` receives the
/// row count; fails with `GS_STATUS_BUFFER_TOO_SMALL` if `cap` is less.
#[no_mangle]
pub unsafe extern "C" fn gs_dataset_column(
    d: *const GsDataset,
    name: *const c_char,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> GsStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("dataset"))?;
        let name = str_arg(name, "name")?;
        let col = d
            .0
            .column(name)
            .ok_or_else(|| Failure(GsStatus::Schema, format!("unknown variable '{name}'")))?;
        *out_arg(len, "len")? = col.len();
        if cap < col.len() {
            return Err(Failure(
                GsStatus::BufferTooSmall,
                format!("buffer holds {cap} values, column has {}", col.len()),
            ));
        }
        if !col.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            let dst = std::slice::from_raw_parts_mut(buf, col.len());
            for (d, s) in dst.iter_mut().zip(col) {
                *d = s.unwrap_or(f64::NAN);
            }
        }
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsCleaningCounts {
    pub rows_in: usize,
    pub rows_out: usize,
    pub dropped_missing: usize,
    pub dropped_out_of_range: usize,
    pub dropped_outlier: usize,
}

/// Cleans with the default ranges. `tukey_k <= 0` disables outlier
/// removal. `counts` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn gs_dataset_clean(
    d: *const GsDataset,
    tukey_k: f64,
    out: *mut *mut GsDataset,
    counts: *mut GsCleaningCounts,
) -> GsStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("dataset"))?;
        if tukey_k.is_nan() {
            return Err(Failure(GsStatus::Domain, "tukey_k is NaN".into()));
        }
        let rule = if tukey_k > 0.0 { OutlierRule::Tukey(tukey_k) } else { OutlierRule::None };
        let (cleaned, report) = clean(&d.0, &RangeSpec::default(), rule)?;
        if let Some(c) = counts.as_mut() {
            *c = GsCleaningCounts {
                rows_in: report.rows_in,
                rows_out: report.rows_out,
                dropped_missing: report.dropped_missing,
                dropped_out_of_range: report.dropped_out_of_range,
                dropped_outlier: report.dropped_outlier,
            };
        }
        give(out, GsDataset(cleaned))
    })
}

#[no_mangle]
pub unsafe extern "C" fn gs_dataset_free(d: *mut GsDataset) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

// ------------------------------------------------------------- regression

/// Opaque fitted-model handle; holds the stepwise history when produced
/// by `gs_stepwise_forward`.
pub struct GsFit {
    fit: OlsFit,
    names: Vec<CString>,
    steps: Vec<ModelSummaryRow>,
}

impl GsFit {
    fn new(fit: OlsFit, steps: Vec<ModelSummaryRow>) -> Self {
        let names = std::iter::once("(Constant)")
            .chain(fit.predictors.iter().map(String::as_str))
            .map(|s| CString::new(s).unwrap_or_default())
            .collect();
        GsFit { fit, names, steps }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsFitStats {
    pub n: usize,
    pub n_predictors: usize,
    pub r: f64,
    pub r2: f64,
    pub adj_r2: f64,
    pub see: f64,
}

/// One coefficient row; `beta` is NaN for the intercept.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsCoefficient {
    pub b: f64,
    pub se_b: f64,
    pub beta: f64,
    pub t: f64,
    pub p: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsStep {
    pub r: f64,
    pub r2: f64,
    pub adj_r2: f64,
    pub see: f64,
    pub r2_change: f64,
    pub f_change: f64,
    pub df1: usize,
    pub df2: usize,
    pub sig_f_change: f64,
}

/// OLS of `response` on `k` predictors plus intercept.
#[no_mangle]
pub unsafe extern "C" fn gs_ols_fit(
    d: *const GsDataset,
    response: *const c_char,
    predictors: *const *const c_char,
    k: usize,
    out: *mut *mut GsFit,
) -> GsStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("dataset"))?;
        let response = str_arg(response, "response")?;
        let predictors = names_arg(predictors, k, "predictors")?;
        give(out, GsFit::new(ols_fit(&d.0, response, &predictors)?, Vec::new()))
    })
}

/// Forward stepwise selection; the handle holds the final model. Fails
/// with `GS_STATUS_VALIDATION` if no candidate meets `p_enter`.
#[no_mangle]
pub unsafe extern "C" fn gs_stepwise_forward(
    d: *const GsDataset,
    response: *const c_char,
    candidates: *const *const c_char,
    k: usize,
    p_enter: f64,
    out: *mut *mut GsFit,
) -> GsStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("dataset"))?;
        let response = str_arg(response, "response")?;
        let candidates = names_arg(candidates, k, "candidates")?;
        let trace = stepwise_forward(&d.0, response, &candidates, p_enter)?;
        let fit = trace
            .final_fit()
            .cloned()
            .ok_or_else(|| Failure(GsStatus::Validation, "no variable entered the model".into()))?;
        give(out, GsFit::new(fit, trace.rows))
    })
}

unsafe fn fit_ref<'a>(f: *const GsFit) -> Result<&'a GsFit, Failure> {
    f.as_ref().ok_or_else(|| null("fit"))
}

#[no_mangle]
pub unsafe extern "C" fn gs_fit_stats(f: *const GsFit, out: *mut GsFitStats) -> GsStatus {
    guard(|| {
        let f = &fit_ref(f)?.fit;
        *out_arg(out, "out")? = GsFitStats {
            n: f.n,
            n_predictors: f.predictors.len(),
            r: f.r,
            r2: f.r2,
            adj_r2: f.adj_r2,
            see: f.see,
        };
        Ok(())
    })
}

/// Coefficient `i`, where 0 is the intercept and `i` in 1..=n_predictors
/// follows the entry order.
#[no_mangle]
pub unsafe extern "C" fn gs_fit_coefficient(f: *const GsFit, i: usize, out: *mut GsCoefficient) -> GsStatus {
    guard(|| {
        let f = &fit_ref(f)?.fit;
        if i >= f.b.len() {
            return Err(Failure(GsStatus::Validation, format!("coefficient index {i} out of range")));
        }
        *out_arg(out, "out")? = GsCoefficient {
            b: f.b[i],
            se_b: f.se_b[i],
            beta: if i == 0 { f64::NAN } else { f.beta[i - 1] },
            t: f.t_stats[i],
            p: f.p_values[i],
        };
        Ok(())
    })
}

/// Name of term `i` ("(Constant)" for 0); owned by the handle. NULL if
/// out of range.
#[no_mangle]
pub unsafe extern "C" fn gs_fit_term_name(f: *const GsFit, i: usize) -> *const c_char {
    f.as_ref()
        .and_then(|f| f.names.get(i))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Number of stepwise steps; 0 for a direct OLS fit.
#[no_mangle]
pub unsafe extern "C" fn gs_fit_step_count(f: *const GsFit, out: *mut usize) -> GsStatus {
    guard(|| {
        *out_arg(out, "out")? = fit_ref(f)?.steps.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gs_fit_step(f: *const GsFit, i: usize, out: *mut GsStep) -> GsStatus {
    guard(|| {
        let s = fit_ref(f)?
            .steps
            .get(i)
            .ok_or_else(|| Failure(GsStatus::Validation, format!("step index {i} out of range")))?;
        *out_arg(out, "out")? = GsStep {
            r: s.r,
            r2: s.r2,
            adj_r2: s.adj_r2,
            see: s.see,
            r2_change: s.r2_change,
            f_change: s.f_change,
            df1: s.df1,
            df2: s.df2,
            sig_f_change: s.sig_f_change,
        };
        Ok(())
    })
}

/// Prediction from predictor values given in term order (1..=k).
#[no_mangle]
pub unsafe extern "C" fn gs_fit_predict(f: *const GsFit, x: *const f64, k: usize, out: *mut f64) -> GsStatus {
    guard(|| {
        let f = &fit_ref(f)?.fit;
        if k != f.predictors.len() {
            return Err(Failure(
                GsStatus::Validation,
                format!("expected {} predictor values, got {k}", f.predictors.len()),
            ));
        }
        let x = slice_arg(x, k, "x")?;
        let inputs = f.predictors.iter().cloned().zip(x.iter().copied()).collect();
        *out_arg(out, "out")? = predict(f, &inputs)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gs_fit_free(f: *mut GsFit) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Evaluates `pv_model_4` or `load_model_2` on named inputs.
#[no_mangle]
pub unsafe extern "C" fn gs_predict_published(
    model: *const c_char,
    names: *const *const c_char,
    values: *const f64,
    n: usize,
    out: *mut f64,
) -> GsStatus {
    guard(|| {
        let model: PublishedModel = str_arg(model, "model")?.parse()?;
        let names = names_arg(names, n, "names")?;
        let values = slice_arg(values, n, "values")?;
        let inputs: BTreeMap<String, f64> = names
            .iter()
            .map(|s| s.to_string())
            .zip(values.iter().copied())
            .collect();
        *out_arg(out, "out")? = predict(&model, &inputs)?;
        Ok(())
    })
}

/// Intercept of a published model.
#[no_mangle]
pub unsafe extern "C" fn gs_published_intercept(model: *const c_char, out: *mut f64) -> GsStatus {
    guard(|| {
        let model: PublishedModel = str_arg(model, "model")?.parse()?;
        *out_arg(out, "out")? = model.intercept();
        Ok(())
    })
}
