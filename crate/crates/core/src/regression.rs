//! Ordinary least squares, forward stepwise selection and the published
//! PV and load prediction models.
//!
//! Fits are computed from a Householder QR factorization of the
//! column-equilibrated design matrix (intercept first), never from the
//! normal equations. A column is rejected as collinear when its pivot falls
//! below `RANK_TOLERANCE` times the largest pivot seen so far.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, IRRADIANCE, LOAD, PV, RELATIVE_HUMIDITY, TEMPERATURE, WIND_SPEED};
use crate::descriptive::Moments;
use crate::error::{Error, Result};
use crate::special::{f_upper_p, negligible_ss, t_two_tailed_p};

pub const RANK_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_P_ENTER: f64 = 0.05;
pub const INTERCEPT_LABEL: &str = "(Constant)";

/// A fitted linear model with SPSS-style coefficient and summary statistics.
///
/// Coefficient vectors (`b`, `se_b`, `t_stats`, `p_values`) start with the
/// intercept; `beta` has one entry per predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub response: String,
    pub predictors: Vec<String>,
    pub b: Vec<f64>,
    pub se_b: Vec<f64>,
    pub beta: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r: f64,
    pub r2: f64,
    pub adj_r2: f64,
    /// Standard error of the estimate.
    pub see: f64,
    pub n: usize,
    pub sse: f64,
    pub sst: f64,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
}

impl OlsFit {
    pub fn intercept(&self) -> f64 {
        self.b[0]
    }

    pub fn df_residual(&self) -> usize {
        self.n - self.predictors.len() - 1
    }

    /// True when the residual sum of squares is at rounding level.
    pub fn is_exact(&self) -> bool {
        negligible_ss(self.sse, self.sst)
    }

    pub fn to_model(&self, name: impl Into<String>) -> LinearModel {
        LinearModel {
            name: name.into(),
            response: self.response.clone(),
            intercept: self.b[0],
            terms: self
                .predictors
                .iter()
                .zip(&self.b[1..])
                .map(|(v, &c)| Term {
                    variable: v.clone(),
                    coefficient: c,
                })
                .collect(),
        }
    }
}

struct Qr {
    /// Upper-triangular factor of the scaled design, row-major m x m.
    r: Vec<Vec<f64>>,
    /// First m entries of Q^T y.
    qty: Vec<f64>,
    scale: Vec<f64>,
}

/// Householder QR of `columns` (each of length n) with right-hand side `y`.
fn householder_qr(columns: &[&[f64]], names: &[&str], y: &[f64]) -> Result<Qr> {
    let m = columns.len();
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut scale = Vec::with_capacity(m);
    for (col, name) in columns.iter().zip(names) {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Collinearity(name.to_string()));
        }
        scale.push(norm);
        a.push(col.iter().map(|v| v / norm).collect());
    }
    let mut rhs = y.to_vec();
    let mut largest_pivot = 0.0f64;

    for j in 0..m {
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let x0 = a[j][j];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        largest_pivot = largest_pivot.max(alpha.abs());
        if alpha.abs() <= RANK_TOLERANCE * largest_pivot || norm == 0.0 {
            return Err(Error::Collinearity(names[j].to_string()));
        }
        // v = x - alpha e1, stored in place
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        a[j][j] = alpha;
        for x in &mut a[j][j + 1..] {
            *x = 0.0;
        }
        let reflect = |target: &mut [f64]| {
            let dot: f64 = v.iter().zip(target.iter()).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vnorm2;
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= f * vi;
            }
        };
        for col in a.iter_mut().skip(j + 1) {
            reflect(&mut col[j..]);
        }
        reflect(&mut rhs[j..]);
    }

    let r = (0..m)
        .map(|i| (0..m).map(|j| if j >= i { a[j][i] } else { 0.0 }).collect())
        .collect();
    Ok(Qr {
        r,
        qty: rhs[..m].to_vec(),
        scale,
    })
}

fn back_substitute(r: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let m = rhs.len();
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let s: f64 = (i + 1..m).map(|j| r[i][j] * x[j]).sum();
        x[i] = (rhs[i] - s) / r[i][i];
    }
    x
}

/// Diagonal of (R^T R)^{-1} = R^{-1} R^{-T}.
fn inverse_gram_diagonal(r: &[Vec<f64>]) -> Vec<f64> {
    let m = r.len();
    // columns of R^{-1}
    let mut inv = vec![vec![0.0; m]; m];
    for k in 0..m {
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        let col = back_substitute(r, &e);
        for i in 0..m {
            inv[i][k] = col[i];
        }
    }
    inv.iter().map(|row| row.iter().map(|v| v * v).sum()).collect()
}

fn sample_sd(values: &[f64]) -> f64 {
    values.iter().copied().collect::<Moments>().variance().sqrt()
}

/// Least-squares fit of `y` on the named predictor columns plus intercept.
pub fn ols_fit_columns(response: &str, y: &[f64], predictors: &[(&str, &[f64])]) -> Result<OlsFit> {
    let n = y.len();
    let p = predictors.len();
    if n <= p + 1 {
        return Err(Error::InsufficientData {
            required: p + 2,
            found: n,
        });
    }
    for (name, col) in predictors {
        if col.len() != n {
            return Err(Error::Validation(format!(
                "predictor '{name}' has {} values, response has {n}",
                col.len()
            )));
        }
    }
    if let Some(v) = y
        .iter()
        .chain(predictors.iter().flat_map(|(_, c)| c.iter()))
        .find(|v| !v.is_finite())
    {
        return Err(Error::Domain(format!("non-finite value {v} in regression input")));
    }

    let y_moments: Moments = y.iter().copied().collect();
    let sst = y_moments.sum_sq_dev();
    if sst <= 0.0 {
        return Err(Error::Validation(format!("response '{response}' has zero variance")));
    }

    let ones = vec![1.0; n];
    let mut columns: Vec<&[f64]> = vec![&ones];
    let mut names: Vec<&str> = vec![INTERCEPT_LABEL];
    for (name, col) in predictors {
        columns.push(col);
        names.push(name);
    }
    let qr = householder_qr(&columns, &names, y)?;
    let scaled = back_substitute(&qr.r, &qr.qty);
    let b: Vec<f64> = scaled.iter().zip(&qr.scale).map(|(c, s)| c / s).collect();

    let fitted: Vec<f64> = (0..n)
        .map(|i| columns.iter().zip(&b).map(|(col, bj)| col[i] * bj).sum())
        .collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(yi, fi)| yi - fi).collect();
    let sse: f64 = residuals.iter().map(|e| e * e).sum();

    let df = (n - p - 1) as f64;
    let r2 = (1.0 - sse / sst).clamp(0.0, 1.0);
    let adj_r2 = 1.0 - (1.0 - r2) * (n - 1) as f64 / df;
    let see = (sse / df).sqrt();

    let gram = inverse_gram_diagonal(&qr.r);
    let se_b: Vec<f64> = gram
        .iter()
        .zip(&qr.scale)
        .map(|(g, s)| see * g.sqrt() / s)
        .collect();

    let mut t_stats = Vec::with_capacity(p + 1);
    let mut p_values = Vec::with_capacity(p + 1);
    for (bj, sj) in b.iter().zip(&se_b) {
        let t = if *sj > 0.0 {
            bj / sj
        } else if *bj == 0.0 {
            0.0
        } else {
            bj.signum() * f64::INFINITY
        };
        t_stats.push(t);
        p_values.push(t_two_tailed_p(t, df)?.value);
    }

    let sd_y = (sst / (n - 1) as f64).sqrt();
    let beta = predictors
        .iter()
        .zip(&b[1..])
        .map(|((_, col), bj)| bj * sample_sd(col) / sd_y)
        .collect();

    Ok(OlsFit {
        response: response.to_string(),
        predictors: predictors.iter().map(|(n, _)| n.to_string()).collect(),
        b,
        se_b,
        beta,
        t_stats,
        p_values,
        r: r2.sqrt(),
        r2,
        adj_r2,
        see,
        n,
        sse,
        sst,
        residuals,
        fitted,
    })
}

/// Least-squares fit of `response` on `predictors` (in order) plus an
/// intercept. The dataset must have no missing values in those columns.
pub fn ols_fit(d: &Dataset, response: &str, predictors: &[&str]) -> Result<OlsFit> {
    let y = d.values(response)?;
    let cols: Vec<Vec<f64>> = predictors.iter().map(|p| d.values(p)).collect::<Result<_>>()?;
    let named: Vec<(&str, &[f64])> = predictors
        .iter()
        .zip(&cols)
        .map(|(n, c)| (*n, c.as_slice()))
        .collect();
    ols_fit_columns(response, &y, &named)
}

/// One row of the stepwise model summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummaryRow {
    pub step: usize,
    pub r: f64,
    pub r2: f64,
    pub adj_r2: f64,
    pub see: f64,
    pub r2_change: f64,
    pub f_change: f64,
    pub df1: usize,
    pub df2: usize,
    pub sig_f_change: f64,
    pub entered: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedVariable {
    pub variable: String,
    /// Sig. F change had it entered at the last step; absent when it could
    /// not be fitted (collinear with the model).
    pub p_to_enter: Option<f64>,
}

/// History of a forward stepwise run: one summary row and one fit per
/// entered variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepwiseTrace {
    pub response: String,
    pub p_enter: f64,
    pub rows: Vec<ModelSummaryRow>,
    pub models: Vec<OlsFit>,
    pub excluded: Vec<ExcludedVariable>,
}

impl StepwiseTrace {
    /// The last model, or `None` if nothing qualified for entry.
    pub fn final_fit(&self) -> Option<&OlsFit> {
        self.models.last()
    }

    pub fn entered(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.entered.as_str()).collect()
    }
}

struct Candidate {
    index: usize,
    fit: OlsFit,
    f_change: f64,
    sig: f64,
}

/// Forward selection: at each step enter the candidate with the smallest
/// Sig. F change if it is <= `p_enter`. Ties prefer the larger F change,
/// then the earlier candidate. No removal step.
pub fn stepwise_forward_columns(
    response: &str,
    y: &[f64],
    candidates: &[(&str, &[f64])],
    p_enter: f64,
) -> Result<StepwiseTrace> {
    if candidates.is_empty() {
        return Err(Error::Validation("stepwise selection needs at least one candidate".into()));
    }
    if !(p_enter > 0.0 && p_enter < 1.0) {
        return Err(Error::Validation(format!("p_enter must lie in (0, 1), got {p_enter}")));
    }
    for (i, (name, _)) in candidates.iter().enumerate() {
        if *name == response {
            return Err(Error::Validation(format!("response '{name}' listed as a candidate")));
        }
        if candidates[..i].iter().any(|(other, _)| other == name) {
            return Err(Error::Validation(format!("candidate '{name}' listed twice")));
        }
    }
    let n = y.len();
    let sst = y.iter().copied().collect::<Moments>().sum_sq_dev();

    let mut entered: Vec<usize> = Vec::new();
    let mut rows = Vec::new();
    let mut models: Vec<OlsFit> = Vec::new();
    let mut prev_sse = sst;
    let mut prev_r2 = 0.0;
    let mut last_p: Vec<Option<f64>> = vec![None; candidates.len()];

    loop {
        if models.last().is_some_and(OlsFit::is_exact) {
            break;
        }
        let df2 = n.saturating_sub(entered.len() + 2);
        if df2 == 0 {
            break;
        }
        let mut best: Option<Candidate> = None;
        for (index, _) in candidates.iter().enumerate() {
            if entered.contains(&index) {
                continue;
            }
            let cols: Vec<(&str, &[f64])> = entered
                .iter()
                .chain(std::iter::once(&index))
                .map(|&i| candidates[i])
                .collect();
            let fit = match ols_fit_columns(response, y, &cols) {
                Ok(f) => f,
                Err(Error::Collinearity(_)) => {
                    last_p[index] = None;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let (f_change, sig) = if fit.is_exact() {
                (f64::INFINITY, 0.0)
            } else {
                let f = ((prev_sse - fit.sse) / (fit.sse / df2 as f64)).max(0.0);
                (f, f_upper_p(f, 1.0, df2 as f64)?.value)
            };
            last_p[index] = Some(sig);
            let better = match &best {
                None => true,
                Some(b) => sig < b.sig || (sig == b.sig && f_change > b.f_change),
            };
            if better {
                best = Some(Candidate {
                    index,
                    fit,
                    f_change,
                    sig,
                });
            }
        }

        let Some(chosen) = best.filter(|c| c.sig <= p_enter) else {
            break;
        };
        let fit = chosen.fit;
        rows.push(ModelSummaryRow {
            step: rows.len() + 1,
            r: fit.r,
            r2: fit.r2,
            adj_r2: fit.adj_r2,
            see: fit.see,
            r2_change: fit.r2 - prev_r2,
            f_change: chosen.f_change,
            df1: 1,
            df2,
            sig_f_change: chosen.sig,
            entered: candidates[chosen.index].0.to_string(),
        });
        prev_sse = fit.sse;
        prev_r2 = fit.r2;
        entered.push(chosen.index);
        models.push(fit);
    }

    let excluded = candidates
        .iter()
        .enumerate()
        .filter(|(i, _)| !entered.contains(i))
        .map(|(i, (name, _))| ExcludedVariable {
            variable: name.to_string(),
            p_to_enter: last_p[i],
        })
        .collect();

    Ok(StepwiseTrace {
        response: response.to_string(),
        p_enter,
        rows,
        models,
        excluded,
    })
}

pub fn stepwise_forward(
    d: &Dataset,
    response: &str,
    candidates: &[&str],
    p_enter: f64,
) -> Result<StepwiseTrace> {
    let y = d.values(response)?;
    let cols: Vec<Vec<f64>> = candidates.iter().map(|c| d.values(c)).collect::<Result<_>>()?;
    let named: Vec<(&str, &[f64])> = candidates
        .iter()
        .zip(&cols)
        .map(|(n, c)| (*n, c.as_slice()))
        .collect();
    stepwise_forward_columns(response, &y, &named, p_enter)
}

/// Model summary rows of a trace with at least one entry step.
pub fn model_summary(trace: &StepwiseTrace) -> Result<Vec<ModelSummaryRow>> {
    if trace.rows.is_empty() {
        return Err(Error::Validation("no variable entered the model".into()));
    }
    Ok(trace.rows.clone())
}

/// F change implied by an R-square change with one added predictor.
pub fn f_change_from_r2(r2_change: f64, r2: f64, df2: usize) -> f64 {
    if r2 >= 1.0 {
        f64::INFINITY
    } else {
        r2_change * df2 as f64 / (1.0 - r2)
    }
}

/// Adjusted R-square for `p` predictors on `n` observations.
pub fn adjusted_r2(r2: f64, n: usize, p: usize) -> f64 {
    1.0 - (1.0 - r2) * (n - 1) as f64 / (n - p - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
}

impl Spread {
    fn of(values: &[f64]) -> Self {
        let m: Moments = values.iter().copied().collect();
        Spread {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: m.mean(),
            sd: m.variance().sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub predicted: Spread,
    pub residual: Spread,
    pub std_predicted: Spread,
    pub std_residual: Spread,
    pub n: usize,
}

pub fn residual_statistics(fit: &OlsFit) -> ResidualStats {
    let predicted = Spread::of(&fit.fitted);
    let std_predicted: Vec<f64> = fit
        .fitted
        .iter()
        .map(|f| {
            if predicted.sd > 0.0 {
                (f - predicted.mean) / predicted.sd
            } else {
                0.0
            }
        })
        .collect();
    let std_residual: Vec<f64> = fit
        .residuals
        .iter()
        .map(|e| if fit.see > 0.0 { e / fit.see } else { 0.0 })
        .collect();
    ResidualStats {
        predicted,
        residual: Spread::of(&fit.residuals),
        std_predicted: Spread::of(&std_predicted),
        std_residual: Spread::of(&std_residual),
        n: fit.n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub variable: String,
    pub coefficient: f64,
}

/// Intercept plus named linear terms; the on-disk form of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub name: String,
    pub response: String,
    pub intercept: f64,
    pub terms: Vec<Term>,
}

/// Anything that predicts as intercept + sum(coefficient * input).
pub trait Predictor {
    fn intercept(&self) -> f64;
    fn terms(&self) -> Vec<(&str, f64)>;
}

impl Predictor for LinearModel {
    fn intercept(&self) -> f64 {
        self.intercept
    }

    fn terms(&self) -> Vec<(&str, f64)> {
        self.terms
            .iter()
            .map(|t| (t.variable.as_str(), t.coefficient))
            .collect()
    }
}

impl Predictor for OlsFit {
    fn intercept(&self) -> f64 {
        self.b[0]
    }

    fn terms(&self) -> Vec<(&str, f64)> {
        self.predictors
            .iter()
            .map(String::as_str)
            .zip(self.b[1..].iter().copied())
            .collect()
    }
}

/// Evaluates a linear model. Negative outputs are returned unchanged.
pub fn predict<P: Predictor + ?Sized>(model: &P, inputs: &BTreeMap<String, f64>) -> Result<f64> {
    let mut value = model.intercept();
    for (variable, coefficient) in model.terms() {
        let x = inputs
            .get(variable)
            .ok_or_else(|| Error::MissingInput(variable.to_string()))?;
        value += coefficient * x;
    }
    Ok(value)
}

/// The two fitted equations reported for the rooftop installation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PublishedModel {
    /// PV output from irradiance, temperature, humidity and wind speed.
    PvModel4,
    /// Building load from temperature and humidity.
    LoadModel2,
}

impl PublishedModel {
    pub const ALL: [PublishedModel; 2] = [PublishedModel::PvModel4, PublishedModel::LoadModel2];

    pub fn name(self) -> &'static str {
        match self {
            PublishedModel::PvModel4 => "pv_model_4",
            PublishedModel::LoadModel2 => "load_model_2",
        }
    }

    fn definition(self) -> (&'static str, f64, &'static [(&'static str, f64)]) {
        match self {
            PublishedModel::PvModel4 => (
                PV,
                7.468,
                &[
                    (IRRADIANCE, 0.017),
                    (TEMPERATURE, -0.155),
                    (RELATIVE_HUMIDITY, -0.031),
                    (WIND_SPEED, 0.030),
                ],
            ),
            PublishedModel::LoadModel2 => (
                LOAD,
                15.614,
                &[(TEMPERATURE, -0.168), (RELATIVE_HUMIDITY, -0.056)],
            ),
        }
    }

    pub fn response(self) -> &'static str {
        self.definition().0
    }

    pub fn model(self) -> LinearModel {
        let (response, intercept, terms) = self.definition();
        LinearModel {
            name: self.name().to_string(),
            response: response.to_string(),
            intercept,
            terms: terms
                .iter()
                .map(|(v, c)| Term {
                    variable: v.to_string(),
                    coefficient: *c,
                })
                .collect(),
        }
    }
}

impl fmt::Display for PublishedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PublishedModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PublishedModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown model '{s}'")))
    }
}

impl Predictor for PublishedModel {
    fn intercept(&self) -> f64 {
        self.definition().1
    }

    fn terms(&self) -> Vec<(&str, f64)> {
        self.definition().2.to_vec()
    }
}

pub fn published_models() -> Vec<LinearModel> {
    PublishedModel::ALL.iter().map(|m| m.model()).collect()
}
