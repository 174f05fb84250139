//! Descriptive statistics with SPSS-compatible definitions.
//!
//! Sample variance uses the n - 1 denominator, skewness is the
//! bias-adjusted G1, quantiles follow the (n + 1)p interpolation rule and
//! tied modes resolve to the smallest value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trim fraction used for the trimmed mean in summaries and Levene's test.
pub const DEFAULT_TRIM: f64 = 0.05;

/// Every statistic of a descriptive-analysis column for one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveSummary {
    pub n: usize,
    pub n_missing: usize,
    pub mean: f64,
    pub se_mean: f64,
    pub median: f64,
    pub mode: f64,
    pub sd: f64,
    pub variance: f64,
    /// Absent for constant data or fewer than three values.
    pub skewness: Option<f64>,
    /// Absent for fewer than three values.
    pub se_skewness: Option<f64>,
    pub range: f64,
    pub min: f64,
    pub max: f64,
    pub trimmed_mean: f64,
}

/// Streaming central moments up to third order.
///
/// Uses the pairwise update of Welford/Terriberry, so it never forms raw
/// power sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
    m3: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sum of squared deviations from the mean.
    pub fn sum_sq_dev(&self) -> f64 {
        self.m2
    }

    /// Sample variance (n - 1 denominator). NaN for n < 2.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Bias-adjusted sample skewness G1, or `None` when undefined.
    pub fn skewness(&self) -> Option<f64> {
        if self.n < 3 || self.m2 <= 0.0 {
            return None;
        }
        let n = self.n as f64;
        let m2 = self.m2 / n;
        let m3 = self.m3 / n;
        Some((n * (n - 1.0)).sqrt() / (n - 2.0) * m3 / m2.powf(1.5))
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Standard error of skewness for a sample of size `n` (n >= 3).
pub fn se_skewness(n: usize) -> Option<f64> {
    if n < 3 {
        return None;
    }
    let n = n as f64;
    Some((6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0))).sqrt())
}

fn check_finite(values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite value {v} in input")));
    }
    Ok(())
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
}

/// Quantile of already-sorted data by the (n + 1)p rule (weighted average
/// at the fractional order statistic, clamped to the extremes).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty data");
    let pos = (n as f64 + 1.0) * p;
    if pos <= 1.0 {
        return sorted[0];
    }
    if pos >= n as f64 {
        return sorted[n - 1];
    }
    let lower = pos.floor();
    let frac = pos - lower;
    let i = lower as usize - 1;
    sorted[i] + frac * (sorted[i + 1] - sorted[i])
}

/// Median: midpoint of the two central order statistics for even n.
pub fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "median of empty data");
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData { required: 1, found: 0 });
    }
    check_finite(values)?;
    Ok(median_sorted(&sorted_copy(values)))
}

fn mode_sorted(sorted: &[f64]) -> f64 {
    let mut best = sorted[0];
    let mut best_count = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        // strict comparison keeps the smallest of tied values
        if j - i > best_count {
            best_count = j - i;
            best = sorted[i];
        }
        i = j;
    }
    best
}

/// Most frequent value; ties go to the smallest value.
pub fn mode(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData { required: 1, found: 0 });
    }
    check_finite(values)?;
    Ok(mode_sorted(&sorted_copy(values)))
}

fn trimmed_mean_sorted(sorted: &[f64], fraction: f64) -> Result<f64> {
    let n = sorted.len();
    let k = (n as f64 * fraction).floor() as usize;
    if n == 0 || 2 * k >= n {
        return Err(Error::InsufficientData {
            required: 2 * k + 1,
            found: n,
        });
    }
    let kept = &sorted[k..n - k];
    Ok(kept.iter().copied().collect::<Moments>().mean())
}

/// Mean after removing `floor(n * fraction)` values from each end.
pub fn trimmed_mean(values: &[f64], fraction: f64) -> Result<f64> {
    if !(0.0..=0.25).contains(&fraction) {
        return Err(Error::Domain(format!(
            "trim fraction must lie in [0, 0.25], got {fraction}"
        )));
    }
    check_finite(values)?;
    trimmed_mean_sorted(&sorted_copy(values), fraction)
}

/// Full descriptive summary of a complete (no missing values) sample.
pub fn summarize(values: &[f64]) -> Result<DescriptiveSummary> {
    if values.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            found: values.len(),
        });
    }
    check_finite(values)?;
    let moments: Moments = values.iter().copied().collect();
    let sorted = sorted_copy(values);
    let n = values.len();
    let variance = moments.variance();
    let sd = variance.sqrt();
    let min = sorted[0];
    let max = sorted[n - 1];
    let skewness = if sd > 0.0 { moments.skewness() } else { None };

    Ok(DescriptiveSummary {
        n,
        n_missing: 0,
        mean: moments.mean(),
        se_mean: sd / (n as f64).sqrt(),
        median: median_sorted(&sorted),
        mode: mode_sorted(&sorted),
        sd,
        variance,
        skewness,
        se_skewness: se_skewness(n),
        range: max - min,
        min,
        max,
        trimmed_mean: trimmed_mean_sorted(&sorted, DEFAULT_TRIM)?,
    })
}

/// Summary of a column that may contain missing cells; missing values are
/// counted and excluded.
pub fn summarize_column(values: &[Option<f64>]) -> Result<DescriptiveSummary> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let mut summary = summarize(&present)?;
    summary.n_missing = values.len() - present.len();
    Ok(summary)
}

/// How histogram bins are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinRule {
    Count(usize),
    /// ceil(log2 n) + 1 bins.
    Sturges,
    /// Bin width 2 * IQR / n^(1/3).
    FreedmanDiaconis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// (mean, sd) of the normal curve overlay; sd is absent for n < 2.
    pub overlay_mean: f64,
    pub overlay_sd: Option<f64>,
}

fn sturges_bins(n: usize) -> usize {
    (n as f64).log2().ceil() as usize + 1
}

/// Equal-width histogram over [min, max]. Bins are right-open except the
/// last, which is closed.
pub fn histogram(values: &[f64], rule: BinRule) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::InsufficientData { required: 1, found: 0 });
    }
    check_finite(values)?;
    let sorted = sorted_copy(values);
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    let moments: Moments = values.iter().copied().collect();
    let overlay_sd = (n >= 2).then(|| moments.variance().sqrt());

    if min == max {
        return Ok(Histogram {
            bin_edges: vec![min, max],
            counts: vec![n],
            overlay_mean: moments.mean(),
            overlay_sd,
        });
    }

    let bins = match rule {
        BinRule::Count(0) => {
            return Err(Error::Domain("histogram needs at least one bin".into()));
        }
        BinRule::Count(b) => b,
        BinRule::Sturges => sturges_bins(n),
        BinRule::FreedmanDiaconis => {
            let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
            if iqr > 0.0 {
                let width = 2.0 * iqr / (n as f64).cbrt();
                ((max - min) / width).ceil().max(1.0) as usize
            } else {
                sturges_bins(n)
            }
        }
    };

    let width = (max - min) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| min + i as f64 * width).collect();
    edges.push(max);

    let mut counts = vec![0usize; bins];
    for &v in &sorted {
        let mut idx = (((v - min) / width).floor() as usize).min(bins - 1);
        // settle rounding at the edges
        while idx > 0 && v < edges[idx] {
            idx -= 1;
        }
        while idx + 1 < bins && v >= edges[idx + 1] {
            idx += 1;
        }
        counts[idx] += 1;
    }

    Ok(Histogram {
        bin_edges: edges,
        counts,
        overlay_mean: moments.mean(),
        overlay_sd,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub iqr: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    /// Points beyond 1.5 IQR from the box, as (row index, value).
    pub outliers: Vec<(usize, f64)>,
    /// Points beyond 3 IQR from the box; a subset of `outliers`.
    pub extremes: Vec<(usize, f64)>,
}

/// Tukey fences `(lo, hi)` at `k` IQRs from the quartiles.
pub fn tukey_fences(sorted: &[f64], k: f64) -> (f64, f64) {
    let q1 = quantile_sorted(sorted, 0.25);
    let q3 = quantile_sorted(sorted, 0.75);
    let iqr = q3 - q1;
    (q1 - k * iqr, q3 + k * iqr)
}

pub fn boxplot_stats(values: &[f64]) -> Result<BoxplotStats> {
    if values.len() < 4 {
        return Err(Error::InsufficientData {
            required: 4,
            found: values.len(),
        });
    }
    check_finite(values)?;
    let sorted = sorted_copy(values);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (inner_lo, inner_hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let (outer_lo, outer_hi) = (q1 - 3.0 * iqr, q3 + 3.0 * iqr);

    let inside = sorted.iter().filter(|&&v| v >= inner_lo && v <= inner_hi);
    let whisker_lo = inside.clone().next().copied().unwrap_or(q1);
    let whisker_hi = inside.clone().next_back().copied().unwrap_or(q3);

    let mut outliers = Vec::new();
    let mut extremes = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if v < inner_lo || v > inner_hi {
            outliers.push((i, v));
            if v < outer_lo || v > outer_hi {
                extremes.push((i, v));
            }
        }
    }

    Ok(BoxplotStats {
        q1,
        median: median_sorted(&sorted),
        q3,
        iqr,
        whisker_lo,
        whisker_hi,
        outliers,
        extremes,
    })
}
