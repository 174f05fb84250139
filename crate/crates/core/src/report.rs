//! Report model and SPSS-style rendering.
//!
//! A [`Report`] is an ordered list of sections. Each section carries the
//! formatted tables used for text output and the raw analysis values used
//! for JSON output. Text cells follow SPSS conventions: no leading zero
//! before the decimal point, p-values to three decimals (so p < 5e-4 prints
//! `.000`), and no negative zero.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::dataset::{CleaningReport, Dataset};
use crate::descriptive::{BoxplotStats, DescriptiveSummary, Histogram, DEFAULT_TRIM};
use crate::inference::{AnovaResult, CorrelationMatrix, LeveneResult, LeveneVariant, Significance};
use crate::regression::{ModelSummaryRow, ResidualStats, StepwiseTrace, INTERCEPT_LABEL};

/// Placeholder for statistics that are undefined for the data.
pub const ABSENT: &str = "—";

/// `x` to `decimals` places with the leading zero dropped: `0.273` renders
/// as `.273`, `-0.155` as `-.155`, and values that round to zero as `.000`.
pub fn spss_number(x: f64, decimals: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "Inf".into() } else { "-Inf".into() };
    }
    let mut s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s.remove(0);
    }
    if decimals > 0 {
        if let Some(rest) = s.strip_prefix("0.") {
            s = format!(".{rest}");
        } else if let Some(rest) = s.strip_prefix("-0.") {
            s = format!("-.{rest}");
        }
    }
    s
}

pub fn spss_p(p: f64) -> String {
    spss_number(p, 3)
}

fn opt_number(x: Option<f64>, decimals: usize) -> String {
    x.map_or_else(|| ABSENT.to_string(), |v| spss_number(v, decimals))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Table {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub footnotes: Vec<String>,
    /// Leading label columns, rendered left-aligned.
    pub stub_columns: usize,
}

impl Table {
    pub fn new(title: impl Into<String>, headers: Vec<String>) -> Self {
        Table {
            title: title.into(),
            headers,
            rows: Vec::new(),
            footnotes: Vec::new(),
            stub_columns: 1,
        }
    }

    fn with_stubs(mut self, n: usize) -> Self {
        self.stub_columns = n;
        self
    }

    /// Fixed-width text; stub columns left-aligned, the rest right-aligned.
    pub fn render(&self) -> String {
        let cols = self
            .rows
            .iter()
            .map(Vec::len)
            .chain(std::iter::once(self.headers.len()))
            .max()
            .unwrap_or(0);
        let mut widths = vec![0usize; cols];
        for row in std::iter::once(&self.headers).chain(&self.rows) {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.chars().count());
            }
        }
        let line = |row: &[String]| -> String {
            let mut out = String::new();
            for (i, w) in widths.iter().enumerate() {
                let cell = row.get(i).map(String::as_str).unwrap_or("");
                let pad = w - cell.chars().count();
                if i > 0 {
                    out.push_str("  ");
                }
                if i < self.stub_columns {
                    out.push_str(cell);
                    out.extend(std::iter::repeat_n(' ', pad));
                } else {
                    out.extend(std::iter::repeat_n(' ', pad));
                    out.push_str(cell);
                }
            }
            out.trim_end().to_string()
        };
        let total: usize = widths.iter().sum::<usize>() + 2 * cols.saturating_sub(1);
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let _ = writeln!(out, "{}", line(&self.headers));
        let _ = writeln!(out, "{}", "-".repeat(total));
        for row in &self.rows {
            let _ = writeln!(out, "{}", line(row));
        }
        for note in &self.footnotes {
            let _ = writeln!(out, "{note}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Section {
    pub id: String,
    pub title: String,
    #[serde(skip)]
    pub tables: Vec<Table>,
    /// Analysis values; non-finite numbers serialize as null.
    pub data: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub sections: Vec<Section>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            sections: Vec::new(),
        }
    }

    pub fn push(&mut self, section: Section) {
        self.sections.push(section);
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "== {} ==", s.title);
            for t in &s.tables {
                out.push('\n');
                out.push_str(&t.render());
            }
        }
        out
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values serialize");
        s.push('\n');
        s
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("analysis values serialize")
}

fn label(d: &Dataset, name: &str) -> String {
    d.variable(name).map_or_else(|| name.to_string(), |v| v.label())
}

fn strings<I: IntoIterator<Item = S>, S: Into<String>>(items: I) -> Vec<String> {
    items.into_iter().map(Into::into).collect()
}

pub fn cleaning_section(report: &CleaningReport) -> Section {
    let mut stages = Table::new("Cleaning Summary", strings(["Stage", "Rows"]));
    stages.rows = vec![
        strings(["Rows in".to_string(), report.rows_in.to_string()]),
        strings(["Dropped (missing)".to_string(), report.dropped_missing.to_string()]),
        strings(["Dropped (out of range)".to_string(), report.dropped_out_of_range.to_string()]),
        strings(["Dropped (outlier)".to_string(), report.dropped_outlier.to_string()]),
        strings(["Rows out".to_string(), report.rows_out.to_string()]),
    ];
    let mut per = Table::new(
        "Cells Flagged per Variable",
        strings(["Variable", "Missing", "Out of range", "Outlier"]),
    );
    per.rows = report
        .per_variable
        .iter()
        .map(|v| {
            vec![
                v.variable.clone(),
                v.missing.to_string(),
                v.out_of_range.to_string(),
                v.outlier.to_string(),
            ]
        })
        .collect();
    stages
        .footnotes
        .push("A row is counted once, at the first stage that drops it.".into());
    Section {
        id: "cleaning".into(),
        title: "Data Cleaning".into(),
        tables: vec![stages, per],
        data: to_value(report),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VariableSummary {
    pub variable: String,
    pub label: String,
    pub summary: DescriptiveSummary,
}

pub fn descriptive_section(d: &Dataset, summaries: &[VariableSummary]) -> Section {
    let mut headers = vec![String::new()];
    headers.extend(summaries.iter().map(|s| label(d, &s.variable)));
    let mut t = Table::new("Statistical Descriptive Analysis", headers);
    type Cell = fn(&DescriptiveSummary) -> String;
    let rows: [(&str, Cell); 14] = [
        ("N Valid", |s| s.n.to_string()),
        ("Missing", |s| s.n_missing.to_string()),
        ("Mean", |s| spss_number(s.mean, 4)),
        ("Std. Error of Mean", |s| spss_number(s.se_mean, 5)),
        ("Median", |s| spss_number(s.median, 4)),
        ("Mode", |s| spss_number(s.mode, 2)),
        ("Std. Deviation", |s| spss_number(s.sd, 5)),
        ("Variance", |s| spss_number(s.variance, 3)),
        ("Skewness", |s| opt_number(s.skewness, 3)),
        ("Std. Error of Skewness", |s| opt_number(s.se_skewness, 3)),
        ("Range", |s| spss_number(s.range, 2)),
        ("Minimum", |s| spss_number(s.min, 2)),
        ("Maximum", |s| spss_number(s.max, 2)),
        ("Trimmed Mean", |s| spss_number(s.trimmed_mean, 4)),
    ];
    for (name, cell) in rows {
        let mut row = vec![name.to_string()];
        row.extend(summaries.iter().map(|s| cell(&s.summary)));
        t.rows.push(row);
    }
    t.footnotes.push(format!(
        "Trimmed Mean discards the top and bottom {}% of cases.",
        DEFAULT_TRIM * 100.0
    ));
    Section {
        id: "descriptive".into(),
        title: "Descriptive Statistics".into(),
        tables: vec![t],
        data: to_value(&summaries),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Distribution {
    pub variable: String,
    pub histogram: Histogram,
    pub boxplot: BoxplotStats,
}

pub fn distribution_section(d: &Dataset, dists: &[Distribution]) -> Section {
    let mut tables = Vec::new();
    let mut bp = Table::new(
        "Boxplot Statistics",
        strings([
            "", "Q1", "Median", "Q3", "IQR", "Lower Whisker", "Upper Whisker", "Outliers", "Extremes",
        ]),
    );
    for x in dists {
        let b = &x.boxplot;
        bp.rows.push(vec![
            label(d, &x.variable),
            spss_number(b.q1, 3),
            spss_number(b.median, 3),
            spss_number(b.q3, 3),
            spss_number(b.iqr, 3),
            spss_number(b.whisker_lo, 3),
            spss_number(b.whisker_hi, 3),
            b.outliers.len().to_string(),
            b.extremes.len().to_string(),
        ]);
    }
    bp.footnotes
        .push("Outliers lie beyond 1.5 IQR from the box; extremes beyond 3 IQR.".into());
    tables.push(bp);
    for x in dists {
        let h = &x.histogram;
        let mut t = Table::new(
            format!("Histogram: {}", label(d, &x.variable)),
            strings(["Bin", "Lower", "Upper", "Frequency"]),
        );
        for (i, c) in h.counts.iter().enumerate() {
            t.rows.push(vec![
                (i + 1).to_string(),
                spss_number(h.bin_edges[i], 3),
                spss_number(h.bin_edges[i + 1], 3),
                c.to_string(),
            ]);
        }
        t.footnotes.push(format!(
            "Normal curve: Mean = {}, Std. Dev. = {}, N = {}",
            spss_number(h.overlay_mean, 4),
            opt_number(h.overlay_sd, 5),
            h.counts.iter().sum::<usize>()
        ));
        tables.push(t);
    }
    Section {
        id: "distribution".into(),
        title: "Distribution Analysis".into(),
        tables,
        data: to_value(&dists),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VariableLevene {
    pub variable: String,
    pub results: Vec<LeveneResult>,
}

pub fn levene_section(d: &Dataset, scheme: &str, rows: &[VariableLevene]) -> Section {
    let mut t = Table::new(
        "Test of Homogeneity of Variances",
        strings(["", "", "Levene Statistic", "df1", "df2", "Sig."]),
    )
    .with_stubs(2);
    for v in rows {
        for (i, r) in v.results.iter().enumerate() {
            let df2 = if r.variant == LeveneVariant::MedianAdjustedDf {
                spss_number(r.df2, 3)
            } else {
                spss_number(r.df2, 0)
            };
            t.rows.push(vec![
                if i == 0 { label(d, &v.variable) } else { String::new() },
                r.variant.label().to_string(),
                spss_number(r.statistic, 3),
                r.df1.to_string(),
                df2,
                spss_p(r.p),
            ]);
        }
    }
    t.footnotes.push(format!("Groups: {scheme}."));
    Section {
        id: "levene".into(),
        title: "Homogeneity of Variances".into(),
        tables: vec![t],
        data: serde_json::json!({ "groups": scheme, "variables": to_value(&rows) }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VariableAnova {
    pub variable: String,
    pub anova: AnovaResult,
}

pub fn anova_section(d: &Dataset, scheme: &str, rows: &[VariableAnova]) -> Section {
    let mut t = Table::new(
        "ANOVA",
        strings(["", "", "Sum of Squares", "df", "Mean Square", "F", "Sig."]),
    )
    .with_stubs(2);
    for v in rows {
        let a = &v.anova;
        t.rows.push(vec![
            label(d, &v.variable),
            "Between Groups".into(),
            spss_number(a.ss_between, 3),
            a.df1.to_string(),
            spss_number(a.ss_between / a.df1 as f64, 3),
            spss_number(a.f, 3),
            spss_p(a.p),
        ]);
        t.rows.push(vec![
            String::new(),
            "Within Groups".into(),
            spss_number(a.ss_within, 3),
            a.df2.to_string(),
            spss_number(a.ss_within / a.df2 as f64, 3),
            String::new(),
            String::new(),
        ]);
        t.rows.push(vec![
            String::new(),
            "Total".into(),
            spss_number(a.ss_between + a.ss_within, 3),
            (a.df1 + a.df2).to_string(),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    t.footnotes.push(format!("Groups: {scheme}."));
    Section {
        id: "anova".into(),
        title: "One-Way ANOVA".into(),
        tables: vec![t],
        data: serde_json::json!({ "groups": scheme, "variables": to_value(&rows) }),
    }
}

const STAR_01: &str = "** Correlation is significant at the 0.01 level (2-tailed).";
const STAR_05: &str = "* Correlation is significant at the 0.05 level (2-tailed).";

pub fn correlation_table(d: &Dataset, m: &CorrelationMatrix, title: &str) -> Table {
    let mut headers = strings(["", ""]);
    headers.extend(m.variables.iter().map(|v| label(d, v)));
    let mut t = Table::new(title, headers).with_stubs(2);
    let (mut any01, mut any05) = (false, false);
    for (i, v) in m.variables.iter().enumerate() {
        let mut r_row = vec![label(d, v), "Pearson Correlation".into()];
        let mut p_row = vec![String::new(), "Sig. (2-tailed)".into()];
        let mut n_row = vec![String::new(), "N".into()];
        for (j, c) in m.cells[i].iter().enumerate() {
            if i == j {
                r_row.push("1".into());
                p_row.push(String::new());
            } else {
                any01 |= c.significance == Significance::P01;
                any05 |= c.significance == Significance::P05;
                r_row.push(format!("{}{}", spss_number(c.r, 3), c.significance.stars()));
                p_row.push(c.p_two_tailed.map(spss_p).unwrap_or_default());
            }
            n_row.push(c.n.to_string());
        }
        t.rows.extend([r_row, p_row, n_row]);
    }
    if any01 {
        t.footnotes.push(STAR_01.into());
    }
    if any05 {
        t.footnotes.push(STAR_05.into());
    }
    t
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationEntry {
    /// Row filter applied before correlating, if any.
    pub subset: Option<String>,
    pub matrix: CorrelationMatrix,
}

pub fn correlation_section(d: &Dataset, entries: &[CorrelationEntry]) -> Section {
    let tables = entries
        .iter()
        .map(|e| {
            let title = match &e.subset {
                None => "Correlations".to_string(),
                Some(f) => format!("Correlations (rows where {f})"),
            };
            correlation_table(d, &e.matrix, &title)
        })
        .collect();
    Section {
        id: "correlation".into(),
        title: "Bivariate Pearson Correlation".into(),
        tables,
        data: to_value(&entries),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientRow {
    pub term: String,
    pub b: f64,
    pub se_b: f64,
    /// Absent for the intercept.
    pub beta: Option<f64>,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelCoefficients {
    pub step: usize,
    pub coefficients: Vec<CoefficientRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionData {
    pub response: String,
    pub p_enter: f64,
    pub model_summary: Vec<ModelSummaryRow>,
    pub coefficients: Vec<ModelCoefficients>,
    pub excluded: Vec<crate::regression::ExcludedVariable>,
    /// Residual statistics of the final model.
    pub residuals: Option<ResidualStats>,
}

impl RegressionData {
    pub fn from_trace(trace: &StepwiseTrace, residuals: Option<ResidualStats>) -> Self {
        let coefficients = trace
            .models
            .iter()
            .enumerate()
            .map(|(i, fit)| ModelCoefficients {
                step: i + 1,
                coefficients: (0..fit.b.len())
                    .map(|j| CoefficientRow {
                        term: if j == 0 {
                            INTERCEPT_LABEL.to_string()
                        } else {
                            fit.predictors[j - 1].clone()
                        },
                        b: fit.b[j],
                        se_b: fit.se_b[j],
                        beta: (j > 0).then(|| fit.beta[j - 1]),
                        t: fit.t_stats[j],
                        p: fit.p_values[j],
                    })
                    .collect(),
            })
            .collect();
        RegressionData {
            response: trace.response.clone(),
            p_enter: trace.p_enter,
            model_summary: trace.rows.clone(),
            coefficients,
            excluded: trace.excluded.clone(),
            residuals,
        }
    }
}

fn footnote_letter(i: usize) -> char {
    (b'a' + (i % 26) as u8) as char
}

/// Model Summary, Coefficients and Residuals Statistics for one response.
pub fn regression_section(d: &Dataset, id: &str, data: &RegressionData) -> Section {
    let response = label(d, &data.response);
    let mut tables = Vec::new();

    let mut ms = Table::new(
        format!("Model Summary for {response}"),
        strings([
            "Model",
            "R",
            "R Square",
            "Adjusted R Square",
            "Std. Error of the Estimate",
            "R Square Change",
            "F Change",
            "df1",
            "df2",
            "Sig. F Change",
        ]),
    );
    let mut predictors = vec![INTERCEPT_LABEL.to_string()];
    for (i, row) in data.model_summary.iter().enumerate() {
        let letter = footnote_letter(i);
        ms.rows.push(vec![
            row.step.to_string(),
            format!("{}^{letter}", spss_number(row.r, 3)),
            spss_number(row.r2, 3),
            spss_number(row.adj_r2, 3),
            spss_number(row.see, 6),
            spss_number(row.r2_change, 3),
            spss_number(row.f_change, 3),
            row.df1.to_string(),
            row.df2.to_string(),
            spss_p(row.sig_f_change),
        ]);
        predictors.push(label(d, &row.entered));
        ms.footnotes
            .push(format!("{letter}. Predictors: {}", predictors.join(", ")));
    }
    let dep = footnote_letter(data.model_summary.len());
    ms.footnotes
        .push(format!("{dep}. Dependent Variable: {response}"));
    if data.model_summary.is_empty() {
        ms.footnotes.push(format!(
            "No variable met the entry criterion (Sig. F Change <= {}).",
            data.p_enter
        ));
    }
    tables.push(ms);

    let mut co = Table::new(
        format!("Coefficients for {response}"),
        strings(["Model", "", "B", "Std. Error", "Beta", "t", "Sig."]),
    )
    .with_stubs(2);
    for m in &data.coefficients {
        for (j, c) in m.coefficients.iter().enumerate() {
            co.rows.push(vec![
                if j == 0 { m.step.to_string() } else { String::new() },
                if j == 0 { c.term.clone() } else { label(d, &c.term) },
                spss_number(c.b, 3),
                spss_number(c.se_b, 3),
                c.beta.map(|b| spss_number(b, 3)).unwrap_or_default(),
                spss_number(c.t, 3),
                spss_p(c.p),
            ]);
        }
    }
    co.footnotes.push(format!("a. Dependent Variable: {response}"));
    tables.push(co);

    if let Some(rs) = &data.residuals {
        let mut t = Table::new(
            format!("Residuals Statistics for {response}"),
            strings(["", "Minimum", "Maximum", "Mean", "Std. Deviation", "N"]),
        );
        let rows = [
            ("Predicted Value", &rs.predicted, 6),
            ("Residual", &rs.residual, 6),
            ("Std. Predicted Value", &rs.std_predicted, 3),
            ("Std. Residual", &rs.std_residual, 3),
        ];
        for (name, s, dp) in rows {
            t.rows.push(vec![
                name.to_string(),
                spss_number(s.min, dp),
                spss_number(s.max, dp),
                spss_number(s.mean, dp),
                spss_number(s.sd, dp),
                rs.n.to_string(),
            ]);
        }
        t.footnotes.push(format!("a. Dependent Variable: {response}"));
        tables.push(t);
    }

    Section {
        id: id.into(),
        title: format!("Multiple Linear Regression: {response}"),
        tables,
        data: to_value(data),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spss_formatting() {
        assert_eq!(spss_number(0.273, 3), ".273");
        assert_eq!(spss_number(-0.155, 3), "-.155");
        assert_eq!(spss_number(-0.0001, 3), ".000");
        assert_eq!(spss_number(7.468, 3), "7.468");
        assert_eq!(spss_number(-26.778973, 6), "-26.778973");
        assert_eq!(spss_number(6805.0, 0), "6805");
        assert_eq!(spss_number(0.4, 0), "0");
        assert_eq!(spss_p(2.0e-85), ".000");
        assert_eq!(spss_p(0.0372), ".037");
        assert_eq!(spss_p(1.0), "1.000");
        assert_eq!(spss_number(f64::INFINITY, 3), "Inf");
        assert_eq!(opt_number(None, 3), ABSENT);
    }

    #[test]
    fn table_alignment() {
        let mut t = Table::new("T", strings(["", "a"]));
        t.rows.push(strings(["Mean", "1.5"]));
        t.rows.push(strings(["N", "10"]));
        t.footnotes.push("note".into());
        assert_eq!(t.render(), "T\n        a\n---------\nMean  1.5\nN      10\nnote\n");
    }

    #[test]
    fn json_nulls_for_infinite_values() {
        let s = Section {
            id: "x".into(),
            title: "X".into(),
            tables: vec![],
            data: to_value(&[1.5, f64::INFINITY]),
        };
        let mut r = Report::new("test");
        r.push(s);
        let v: Value = serde_json::from_str(&r.render_json()).unwrap();
        assert_eq!(v["sections"][0]["data"], serde_json::json!([1.5, null]));
    }
}
