//! Correlation, grouping, homogeneity-of-variance and one-way ANOVA.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{filter_rows, Dataset, RowFilter};
use crate::descriptive::{median, trimmed_mean, Moments, DEFAULT_TRIM};
use crate::error::{Error, Result};
use crate::special::{f_upper_p, negligible_ss, t_two_tailed_p};

/// Two-tailed significance level reached by a test, rendered as stars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Significance {
    None,
    P05,
    P01,
}

impl Significance {
    pub fn from_p(p: f64) -> Self {
        if p < 0.01 {
            Significance::P01
        } else if p < 0.05 {
            Significance::P05
        } else {
            Significance::None
        }
    }

    pub fn stars(self) -> &'static str {
        match self {
            Significance::None => "",
            Significance::P05 => "*",
            Significance::P01 => "**",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub n: usize,
    /// Absent only for the diagonal of a correlation matrix.
    pub p_two_tailed: Option<f64>,
    pub significance: Significance,
}

impl CorrelationResult {
    /// t = r * sqrt((n - 2) / (1 - r^2)); infinite for |r| = 1.
    pub fn t_statistic(&self) -> f64 {
        correlation_t(self.r, self.n)
    }
}

fn correlation_t(r: f64, n: usize) -> f64 {
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        r.signum() * f64::INFINITY
    } else {
        r * ((n as f64 - 2.0) / denom).sqrt()
    }
}

/// Two-tailed p-value of a Pearson r on `n` pairs (df = n - 2).
pub fn correlation_p(r: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InsufficientData { required: 3, found: n });
    }
    Ok(t_two_tailed_p(correlation_t(r, n), (n - 2) as f64)?.value)
}

/// Pearson product-moment correlation with its two-tailed significance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    if x.len() != y.len() {
        return Err(Error::Validation(format!(
            "pearson needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientData { required: 3, found: n });
    }
    if let Some(v) = x.iter().chain(y).find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite value {v} in input")));
    }

    // streaming co-moment
    let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        let k = (i + 1) as f64;
        let dx = a - mx;
        let dy = b - my;
        mx += dx / k;
        my += dy / k;
        sxx += dx * (a - mx);
        syy += dy * (b - my);
        sxy += dx * (b - my);
    }
    if sxx <= 0.0 {
        return Err(Error::UndefinedCorrelation("x".into()));
    }
    if syy <= 0.0 {
        return Err(Error::UndefinedCorrelation("y".into()));
    }
    let mut r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    if 1.0 - r.abs() <= 4.0 * f64::EPSILON {
        r = r.signum();
    }
    let p = correlation_p(r, n)?;
    Ok(CorrelationResult {
        r,
        n,
        p_two_tailed: Some(p),
        significance: Significance::from_p(p),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub variables: Vec<String>,
    /// Row-major, `cells[i][j]` correlates `variables[i]` with `variables[j]`.
    pub cells: Vec<Vec<CorrelationResult>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<&CorrelationResult> {
        let i = self.variables.iter().position(|v| v == a)?;
        let j = self.variables.iter().position(|v| v == b)?;
        Some(&self.cells[i][j])
    }
}

/// Pairwise Pearson correlations over the rows selected by `subset`.
/// Each pair uses the rows where both variables are present.
pub fn correlation_matrix(
    d: &Dataset,
    vars: &[&str],
    subset: Option<&RowFilter>,
) -> Result<CorrelationMatrix> {
    if vars.len() < 2 {
        return Err(Error::Validation("correlation matrix needs at least two variables".into()));
    }
    let filtered;
    let d = match subset {
        Some(f) => {
            filtered = filter_rows(d, f)?;
            &filtered
        }
        None => d,
    };
    let columns: Vec<&[Option<f64>]> = vars
        .iter()
        .map(|v| {
            d.column(v)
                .ok_or_else(|| Error::Validation(format!("unknown variable '{v}'")))
        })
        .collect::<Result<_>>()?;

    let k = vars.len();
    let mut cells: Vec<Vec<Option<CorrelationResult>>> = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let (xs, ys): (Vec<f64>, Vec<f64>) = columns[i]
                .iter()
                .zip(columns[j])
                .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                .unzip();
            let cell = if i == j {
                CorrelationResult {
                    r: 1.0,
                    n: xs.len(),
                    p_two_tailed: None,
                    significance: Significance::None,
                }
            } else {
                pearson(&xs, &ys).map_err(|e| match e {
                    Error::UndefinedCorrelation(which) => Error::UndefinedCorrelation(
                        if which == "x" { vars[i] } else { vars[j] }.to_string(),
                    ),
                    other => other,
                })?
            };
            cells[j][i] = Some(cell.clone());
            cells[i][j] = Some(cell);
        }
    }
    Ok(CorrelationMatrix {
        variables: vars.iter().map(|v| v.to_string()).collect(),
        cells: cells
            .into_iter()
            .map(|row| row.into_iter().map(|c| c.expect("filled")).collect())
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub label: String,
    pub values: Vec<f64>,
}

/// Values partitioned into labeled, nonempty groups (k >= 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedSeries {
    groups: Vec<Group>,
}

impl GroupedSeries {
    pub fn new(groups: Vec<Group>) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::Grouping(format!(
                "need at least 2 groups, got {}",
                groups.len()
            )));
        }
        if let Some(g) = groups.iter().find(|g| g.values.is_empty()) {
            return Err(Error::Grouping(format!("group '{}' is empty", g.label)));
        }
        Ok(Self { groups })
    }

    /// Convenience constructor labelling groups 1..=k.
    pub fn from_values(groups: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            groups
                .into_iter()
                .enumerate()
                .map(|(i, values)| Group {
                    label: (i + 1).to_string(),
                    values,
                })
                .collect(),
        )
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn n_total(&self) -> usize {
        self.groups.iter().map(|g| g.values.len()).sum()
    }
}

/// What orders rows for equal-count binning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinKey {
    /// Chronological blocks.
    RowIndex,
    Column(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupScheme {
    /// One group per distinct value of a (categorical) column.
    ByColumn(String),
    /// k groups of (nearly) equal size by rank of the key; tied key values
    /// share the lowest bin any of them reaches.
    EqualCountBins { on: BinKey, k: usize },
}

impl Default for GroupScheme {
    fn default() -> Self {
        GroupScheme::EqualCountBins {
            on: BinKey::RowIndex,
            k: 25,
        }
    }
}

impl FromStr for GroupScheme {
    type Err = Error;

    /// `index:K`, `bins:COLUMN:K` or `column:COLUMN`.
    fn from_str(s: &str) -> Result<Self> {
        let parse_k = |k: &str| {
            k.trim()
                .parse::<usize>()
                .map_err(|_| Error::Validation(format!("invalid group count '{k}'")))
        };
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["index", k] => Ok(GroupScheme::EqualCountBins {
                on: BinKey::RowIndex,
                k: parse_k(k)?,
            }),
            ["bins", col, k] => Ok(GroupScheme::EqualCountBins {
                on: BinKey::Column(col.to_string()),
                k: parse_k(k)?,
            }),
            ["column", col] => Ok(GroupScheme::ByColumn(col.to_string())),
            _ => Err(Error::Validation(format!(
                "unknown grouping scheme '{s}' (expected index:K, bins:COLUMN:K or column:COLUMN)"
            ))),
        }
    }
}

impl fmt::Display for GroupScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupScheme::ByColumn(c) => write!(f, "column:{c}"),
            GroupScheme::EqualCountBins {
                on: BinKey::RowIndex,
                k,
            } => write!(f, "index:{k}"),
            GroupScheme::EqualCountBins {
                on: BinKey::Column(c),
                k,
            } => write!(f, "bins:{c}:{k}"),
        }
    }
}

/// Partitions one variable's values into groups.
pub fn make_groups(d: &Dataset, variable: &str, scheme: &GroupScheme) -> Result<GroupedSeries> {
    let values = d.values(variable)?;
    match scheme {
        GroupScheme::ByColumn(col) => {
            let keys = d.values(col)?;
            let mut levels: Vec<f64> = keys.clone();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            let groups = levels
                .iter()
                .map(|&level| Group {
                    label: level.to_string(),
                    values: keys
                        .iter()
                        .zip(&values)
                        .filter(|(k, _)| **k == level)
                        .map(|(_, v)| *v)
                        .collect(),
                })
                .collect();
            GroupedSeries::new(groups)
        }
        GroupScheme::EqualCountBins { on, k } => {
            let k = *k;
            if k < 2 {
                return Err(Error::Grouping(format!("need at least 2 groups, got {k}")));
            }
            let n = values.len();
            let keys: Vec<f64> = match on {
                BinKey::RowIndex => (0..n).map(|i| i as f64).collect(),
                BinKey::Column(c) => d.values(c)?,
            };
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));

            let mut bins: Vec<Vec<f64>> = vec![Vec::new(); k];
            let mut rank = 0;
            while rank < n {
                let bin = rank * k / n;
                let mut end = rank + 1;
                while end < n && keys[order[end]] == keys[order[rank]] {
                    end += 1;
                }
                for &row in &order[rank..end] {
                    bins[bin].push(values[row]);
                }
                rank = end;
            }
            GroupedSeries::from_values(bins)
        }
    }
}

/// Center used for the absolute deviations in Levene's test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeveneVariant {
    Mean,
    Median,
    /// Median center with a Satterthwaite-adjusted denominator df.
    MedianAdjustedDf,
    /// 5% trimmed mean center.
    TrimmedMean,
}

impl LeveneVariant {
    pub const ALL: [LeveneVariant; 4] = [
        LeveneVariant::Mean,
        LeveneVariant::Median,
        LeveneVariant::MedianAdjustedDf,
        LeveneVariant::TrimmedMean,
    ];

    pub fn label(self) -> &'static str {
        match self {
            LeveneVariant::Mean => "Based on Mean",
            LeveneVariant::Median => "Based on Median",
            LeveneVariant::MedianAdjustedDf => "Based on Median and with adjusted df",
            LeveneVariant::TrimmedMean => "Based on trimmed mean",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeveneResult {
    pub variant: LeveneVariant,
    pub statistic: f64,
    pub df1: usize,
    pub df2: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub df1: usize,
    pub df2: usize,
    pub p: f64,
    pub ss_between: f64,
    pub ss_within: f64,
}

struct Decomposition {
    ss_between: f64,
    ss_within: f64,
    /// Within-group sum of squares per group.
    ss_groups: Vec<f64>,
}

fn decompose<'a>(groups: impl Iterator<Item = &'a [f64]>) -> Decomposition {
    let moments: Vec<Moments> = groups.map(|g| g.iter().copied().collect()).collect();
    let n_total: usize = moments.iter().map(Moments::count).sum();
    let grand = moments
        .iter()
        .map(|m| m.count() as f64 * m.mean())
        .sum::<f64>()
        / n_total as f64;
    Decomposition {
        ss_between: moments
            .iter()
            .map(|m| m.count() as f64 * (m.mean() - grand).powi(2))
            .sum(),
        ss_within: moments.iter().map(Moments::sum_sq_dev).sum(),
        ss_groups: moments.iter().map(Moments::sum_sq_dev).collect(),
    }
}

/// F ratio with the degenerate cases pinned: no between-group spread gives
/// F = 0, zero within-group spread with nonzero between gives +inf.
fn f_ratio(ss_between: f64, df1: f64, ss_within: f64, df2: f64) -> f64 {
    let total = ss_between + ss_within;
    if ss_between <= 0.0 || negligible_ss(ss_between, total) {
        0.0
    } else if ss_within <= 0.0 || negligible_ss(ss_within, total) {
        f64::INFINITY
    } else {
        (ss_between / df1) / (ss_within / df2)
    }
}

fn check_groups(g: &GroupedSeries) -> Result<()> {
    let n = g.n_total();
    if n <= g.k() {
        return Err(Error::InsufficientData {
            required: g.k() + 1,
            found: n,
        });
    }
    if let Some(v) = g.groups.iter().flat_map(|g| &g.values).find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite value {v} in input")));
    }
    Ok(())
}

/// One-way analysis of variance.
pub fn anova_oneway(g: &GroupedSeries) -> Result<AnovaResult> {
    check_groups(g)?;
    let dec = decompose(g.groups.iter().map(|g| g.values.as_slice()));
    let df1 = g.k() - 1;
    let df2 = g.n_total() - g.k();
    let f = f_ratio(dec.ss_between, df1 as f64, dec.ss_within, df2 as f64);
    let p = f_upper_p(f, df1 as f64, df2 as f64)?.value;
    Ok(AnovaResult {
        f,
        df1,
        df2,
        p,
        ss_between: dec.ss_between,
        ss_within: dec.ss_within,
    })
}

/// Levene's test: a one-way ANOVA on |y - center| per group.
pub fn levene(g: &GroupedSeries, variant: LeveneVariant) -> Result<LeveneResult> {
    check_groups(g)?;
    let deviations: Vec<Vec<f64>> = g
        .groups
        .iter()
        .map(|grp| {
            let center = match variant {
                LeveneVariant::Mean => grp.values.iter().copied().collect::<Moments>().mean(),
                LeveneVariant::Median | LeveneVariant::MedianAdjustedDf => median(&grp.values)?,
                LeveneVariant::TrimmedMean => trimmed_mean(&grp.values, DEFAULT_TRIM)?,
            };
            Ok(grp.values.iter().map(|y| (y - center).abs()).collect())
        })
        .collect::<Result<_>>()?;

    let dec = decompose(deviations.iter().map(Vec::as_slice));
    let df1 = g.k() - 1;
    let plain_df2 = (g.n_total() - g.k()) as f64;
    let statistic = f_ratio(dec.ss_between, df1 as f64, dec.ss_within, plain_df2);

    let df2 = match variant {
        LeveneVariant::MedianAdjustedDf => {
            // Satterthwaite: (sum u_i)^2 / sum(u_i^2 / (n_i - 1)), u_i the
            // within-group sum of squared deviations of Z. Never exceeds
            // N - k by Cauchy-Schwarz.
            let (num, den) = dec
                .ss_groups
                .iter()
                .zip(&g.groups)
                .filter(|(_, grp)| grp.values.len() >= 2)
                .fold((0.0, 0.0), |(num, den), (&u, grp)| {
                    (num + u, den + u * u / (grp.values.len() - 1) as f64)
                });
            if den > 0.0 {
                (num * num / den).min(plain_df2)
            } else {
                plain_df2
            }
        }
        _ => plain_df2,
    };
    let p = f_upper_p(statistic, df1 as f64, df2)?.value;
    Ok(LeveneResult {
        variant,
        statistic,
        df1,
        df2,
        p,
    })
}
