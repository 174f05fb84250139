//! Command implementations behind the `greenstat` binary.
//!
//! Every command loads the input CSV, cleans it with the configured range
//! spec and outlier rule, runs its analyses and returns a [`Report`].
//! Failures are classified into the documented exit codes.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{
    clean, default_schema, load_csv_path, write_csv, CleaningReport, Dataset, OutlierRule, RangeSpec,
    RowFilter, Variable, IRRADIANCE, LOAD, PV, TEMPERATURE, WEATHER_VARIABLES,
};
use crate::descriptive::{boxplot_stats, histogram, summarize_column, BinRule};
use crate::error::Error;
use crate::inference::{anova_oneway, correlation_matrix, levene, make_groups, GroupScheme, LeveneVariant};
use crate::regression::{
    predict, residual_statistics, stepwise_forward, LinearModel, PublishedModel, DEFAULT_P_ENTER,
};
use crate::report::{
    anova_section, cleaning_section, correlation_section, descriptive_section, distribution_section,
    levene_section, regression_section, spss_number, CorrelationEntry, Distribution, RegressionData,
    Report, Section, Table, VariableAnova, VariableLevene, VariableSummary,
};
use crate::synth::{generate, SynthConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_EMPTY: i32 = 3;
pub const EXIT_ANALYSIS: i32 = 4;

/// A command failure carrying its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    /// I/O, parse, schema or configuration problem (exit 2).
    Input(String),
    /// No rows to analyse (exit 3).
    Empty(String),
    /// Error raised by an analysis (exit 4).
    Analysis(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => EXIT_INPUT,
            Failure::Empty(_) => EXIT_EMPTY,
            Failure::Analysis(_) => EXIT_ANALYSIS,
        }
    }

    fn input(e: Error) -> Self {
        Failure::Input(e.to_string())
    }

    fn analysis(e: Error) -> Self {
        Failure::Analysis(e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Empty(m) | Failure::Analysis(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

pub type CmdResult<T> = std::result::Result<T, Failure>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "text" => Ok(OutputFormat::Text),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Validation(format!("unknown format '{other}' (expected text or json)"))),
        }
    }
}

/// Optional settings, as read from a TOML config file or from flags.
/// Later layers override earlier ones field by field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub input: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub outlier_rule: Option<String>,
    pub group_scheme: Option<String>,
    /// Shorthand for `group_scheme = "index:K"`.
    pub groups: Option<usize>,
    pub filter: Option<String>,
    pub p_enter: Option<f64>,
    pub response: Option<String>,
    pub candidates: Option<Vec<String>>,
    pub variables: Option<Vec<String>>,
    pub output_dir: Option<PathBuf>,
    /// Per-variable `[lo, hi]` overrides of the default ranges.
    pub ranges: Option<BTreeMap<String, [f64; 2]>>,
}

impl Settings {
    pub fn from_toml_path(path: &Path) -> CmdResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }

    fn overlay(self, top: Settings) -> Settings {
        let ranges = match (self.ranges, top.ranges) {
            (Some(mut a), Some(b)) => {
                a.extend(b);
                Some(a)
            }
            (a, b) => b.or(a),
        };
        // an explicit --groups outranks a scheme from a lower layer
        let group_scheme = top.group_scheme.or(if top.groups.is_some() { None } else { self.group_scheme });
        Settings {
            input: top.input.or(self.input),
            format: top.format.or(self.format),
            outlier_rule: top.outlier_rule.or(self.outlier_rule),
            group_scheme,
            groups: top.groups.or(self.groups),
            filter: top.filter.or(self.filter),
            p_enter: top.p_enter.or(self.p_enter),
            response: top.response.or(self.response),
            candidates: top.candidates.or(self.candidates),
            variables: top.variables.or(self.variables),
            output_dir: top.output_dir.or(self.output_dir),
            ranges,
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub input: Option<PathBuf>,
    pub schema: Vec<Variable>,
    pub ranges: RangeSpec,
    pub outlier_rule: OutlierRule,
    pub group_scheme: GroupScheme,
    pub filter: Option<RowFilter>,
    pub response: Option<String>,
    pub candidates: Vec<String>,
    pub variables: Vec<String>,
    pub p_enter: f64,
    pub format: OutputFormat,
    pub output_dir: Option<PathBuf>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            input: None,
            schema: default_schema(),
            ranges: RangeSpec::default(),
            outlier_rule: OutlierRule::default(),
            group_scheme: GroupScheme::default(),
            filter: None,
            response: None,
            candidates: Vec::new(),
            variables: Vec::new(),
            p_enter: DEFAULT_P_ENTER,
            format: OutputFormat::Text,
            output_dir: None,
        }
    }
}

impl AnalysisConfig {
    /// Defaults, overridden by the config file, overridden by flags.
    pub fn resolve(file: Option<Settings>, flags: Settings) -> CmdResult<Self> {
        let s = file.unwrap_or_default().overlay(flags);
        let bad = |e: Error| Failure::Input(e.to_string());
        let mut cfg = AnalysisConfig::default();
        cfg.input = s.input;
        if let Some(f) = s.format {
            cfg.format = f;
        }
        if let Some(r) = s.outlier_rule {
            cfg.outlier_rule = r.parse().map_err(bad)?;
        }
        if let Some(g) = s.group_scheme {
            cfg.group_scheme = g.parse().map_err(bad)?;
        } else if let Some(k) = s.groups {
            cfg.group_scheme = format!("index:{k}").parse().map_err(bad)?;
        }
        if let Some(f) = s.filter {
            cfg.filter = Some(f.parse().map_err(bad)?);
        }
        if let Some(p) = s.p_enter {
            cfg.p_enter = p;
        }
        cfg.response = s.response;
        cfg.candidates = s.candidates.unwrap_or_default();
        cfg.variables = s.variables.unwrap_or_default();
        cfg.output_dir = s.output_dir;
        for (name, [lo, hi]) in s.ranges.unwrap_or_default() {
            cfg.ranges = cfg.ranges.with(name, lo, hi).map_err(bad)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CmdResult<()> {
        if !(self.p_enter > 0.0 && self.p_enter < 1.0) {
            return Err(Failure::Input(format!("p_enter must lie in (0, 1), got {}", self.p_enter)));
        }
        let k = match &self.group_scheme {
            GroupScheme::EqualCountBins { k, .. } => Some(*k),
            GroupScheme::ByColumn(_) => None,
        };
        if k.is_some_and(|k| k < 2) {
            return Err(Failure::Input("group count must be at least 2".into()));
        }
        let empty = |p: &Option<PathBuf>| p.as_ref().is_some_and(|p| p.as_os_str().is_empty());
        if empty(&self.input) || empty(&self.output_dir) {
            return Err(Failure::Input("paths must be nonempty".into()));
        }
        Ok(())
    }

    fn input_path(&self) -> CmdResult<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| Failure::Input("no input file given (use --input or the config file)".into()))
    }

    fn output_dir(&self) -> &Path {
        self.output_dir.as_deref().unwrap_or(Path::new("."))
    }

    fn names_or<'a>(&'a self, default: &[&'a str], d: &Dataset) -> Vec<&'a str> {
        if self.variables.is_empty() {
            default
                .iter()
                .copied()
                .filter(|v| d.variable(v).is_some())
                .collect()
        } else {
            self.variables.iter().map(String::as_str).collect()
        }
    }
}

/// Raw dataset, cleaned dataset and the cleaning report.
pub struct Prepared {
    pub raw: Dataset,
    pub data: Dataset,
    pub cleaning: CleaningReport,
}

pub fn prepare(cfg: &AnalysisConfig) -> CmdResult<Prepared> {
    let path = cfg.input_path()?;
    let raw = load_csv_path(path, &cfg.schema).map_err(Failure::input)?;
    if raw.is_empty() {
        return Err(Failure::Empty(format!("{}: no data rows", path.display())));
    }
    let (data, cleaning) = clean(&raw, &cfg.ranges, cfg.outlier_rule).map_err(Failure::analysis)?;
    if data.is_empty() {
        return Err(Failure::Empty(format!(
            "cleaning removed all {} rows ({} missing, {} out of range, {} outliers)",
            cleaning.rows_in, cleaning.dropped_missing, cleaning.dropped_out_of_range, cleaning.dropped_outlier
        )));
    }
    Ok(Prepared { raw, data, cleaning })
}

fn all_names(d: &Dataset) -> Vec<&str> {
    d.variables().iter().map(|v| v.name.as_str()).collect()
}

pub fn describe(d: &Dataset, vars: &[&str]) -> CmdResult<Section> {
    let summaries = vars
        .iter()
        .map(|&v| {
            let column = d
                .column(v)
                .ok_or_else(|| Failure::Analysis(format!("unknown variable '{v}'")))?;
            Ok(VariableSummary {
                variable: v.to_string(),
                label: d.variable(v).map(Variable::label).unwrap_or_default(),
                summary: summarize_column(column).map_err(Failure::analysis)?,
            })
        })
        .collect::<CmdResult<Vec<_>>>()?;
    Ok(descriptive_section(d, &summaries))
}

pub fn distributions(d: &Dataset, vars: &[&str]) -> CmdResult<Section> {
    let dists = vars
        .iter()
        .map(|&v| {
            let values = d.values(v).map_err(Failure::analysis)?;
            Ok(Distribution {
                variable: v.to_string(),
                histogram: histogram(&values, BinRule::Sturges).map_err(Failure::analysis)?,
                boxplot: boxplot_stats(&values).map_err(Failure::analysis)?,
            })
        })
        .collect::<CmdResult<Vec<_>>>()?;
    Ok(distribution_section(d, &dists))
}

pub fn homogeneity(d: &Dataset, vars: &[&str], scheme: &GroupScheme) -> CmdResult<Section> {
    let rows = vars
        .iter()
        .map(|&v| {
            let g = make_groups(d, v, scheme).map_err(Failure::analysis)?;
            let results = LeveneVariant::ALL
                .iter()
                .map(|&variant| levene(&g, variant))
                .collect::<crate::Result<_>>()
                .map_err(Failure::analysis)?;
            Ok(VariableLevene {
                variable: v.to_string(),
                results,
            })
        })
        .collect::<CmdResult<Vec<_>>>()?;
    Ok(levene_section(d, &scheme.to_string(), &rows))
}

pub fn anova(d: &Dataset, vars: &[&str], scheme: &GroupScheme) -> CmdResult<Section> {
    let rows = vars
        .iter()
        .map(|&v| {
            let g = make_groups(d, v, scheme).map_err(Failure::analysis)?;
            Ok(VariableAnova {
                variable: v.to_string(),
                anova: anova_oneway(&g).map_err(Failure::analysis)?,
            })
        })
        .collect::<CmdResult<Vec<_>>>()?;
    Ok(anova_section(d, &scheme.to_string(), &rows))
}

pub fn correlations(d: &Dataset, vars: &[&str], subsets: &[Option<&RowFilter>]) -> CmdResult<Section> {
    let entries = subsets
        .iter()
        .map(|f| {
            Ok(CorrelationEntry {
                subset: f.map(|f| f.to_string()),
                matrix: correlation_matrix(d, vars, *f).map_err(Failure::analysis)?,
            })
        })
        .collect::<CmdResult<Vec<_>>>()?;
    Ok(correlation_section(d, &entries))
}

/// Stepwise fit of `response`; also returns the final model, if any.
pub fn regression(
    d: &Dataset,
    response: &str,
    candidates: &[&str],
    p_enter: f64,
) -> CmdResult<(Section, Option<LinearModel>)> {
    let trace = stepwise_forward(d, response, candidates, p_enter).map_err(Failure::analysis)?;
    let final_fit = trace.final_fit();
    let data = RegressionData::from_trace(&trace, final_fit.map(residual_statistics));
    let model = final_fit.map(|f| f.to_model(format!("{response}_model_{}", trace.rows.len())));
    Ok((regression_section(d, &format!("regression_{response}"), &data), model))
}

const LEVENE_DEFAULT: [&str; 3] = [TEMPERATURE, IRRADIANCE, PV];

fn candidates_for<'a>(cfg: &'a AnalysisConfig, response: &str, d: &Dataset) -> Vec<&'a str> {
    if cfg.candidates.is_empty() {
        WEATHER_VARIABLES
            .iter()
            .copied()
            .filter(|v| *v != response && d.variable(v).is_some())
            .collect()
    } else {
        cfg.candidates.iter().map(String::as_str).collect()
    }
}

/// `clean`: writes `cleaned.csv` into the output directory.
pub fn cmd_clean(cfg: &AnalysisConfig) -> CmdResult<(Report, PathBuf)> {
    let p = prepare(cfg)?;
    let dir = cfg.output_dir();
    std::fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    let path = dir.join("cleaned.csv");
    let file = std::fs::File::create(&path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    write_csv(&p.data, std::io::BufWriter::new(file)).map_err(Failure::input)?;
    let mut r = Report::new("clean");
    r.push(cleaning_section(&p.cleaning));
    Ok((r, path))
}

pub fn cmd_describe(cfg: &AnalysisConfig) -> CmdResult<Report> {
    let p = prepare(cfg)?;
    let default = all_names(&p.data);
    let mut r = Report::new("describe");
    r.push(describe(&p.data, &cfg.names_or(&default, &p.data))?);
    Ok(r)
}

pub fn cmd_correlate(cfg: &AnalysisConfig) -> CmdResult<Report> {
    let p = prepare(cfg)?;
    let default = all_names(&p.data);
    let mut r = Report::new("correlate");
    r.push(correlations(&p.data, &cfg.names_or(&default, &p.data), &[cfg.filter.as_ref()])?);
    Ok(r)
}

pub fn cmd_levene(cfg: &AnalysisConfig) -> CmdResult<Report> {
    let p = prepare(cfg)?;
    let mut r = Report::new("levene");
    r.push(homogeneity(&p.data, &cfg.names_or(&LEVENE_DEFAULT, &p.data), &cfg.group_scheme)?);
    Ok(r)
}

pub fn cmd_anova(cfg: &AnalysisConfig) -> CmdResult<Report> {
    let p = prepare(cfg)?;
    let mut r = Report::new("anova");
    r.push(anova(&p.data, &cfg.names_or(&LEVENE_DEFAULT, &p.data), &cfg.group_scheme)?);
    Ok(r)
}

/// `regress`: optionally writes the final model as JSON to `model_out`.
pub fn cmd_regress(cfg: &AnalysisConfig, model_out: Option<&Path>) -> CmdResult<Report> {
    let p = prepare(cfg)?;
    let response = cfg.response.as_deref().unwrap_or(PV);
    let candidates = candidates_for(cfg, response, &p.data);
    let (section, model) = regression(&p.data, response, &candidates, cfg.p_enter)?;
    if let Some(path) = model_out {
        let model = model.ok_or_else(|| {
            Failure::Analysis(format!("no variable entered the model for '{response}'"))
        })?;
        let json = serde_json::to_string_pretty(&model).expect("model serializes");
        std::fs::write(path, json + "\n")
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    let mut r = Report::new("regress");
    r.push(section);
    Ok(r)
}

/// Where `predict` takes its equation from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Published(String),
    File(PathBuf),
}

pub fn load_model(source: &ModelSource) -> CmdResult<LinearModel> {
    match source {
        ModelSource::Published(name) => name
            .parse::<PublishedModel>()
            .map(PublishedModel::model)
            .map_err(Failure::analysis),
        ModelSource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct PredictionData<'a> {
    model: &'a LinearModel,
    inputs: &'a BTreeMap<String, f64>,
    prediction: f64,
}

pub fn cmd_predict(source: &ModelSource, inputs: &BTreeMap<String, f64>) -> CmdResult<Report> {
    let model = load_model(source)?;
    let value = predict(&model, inputs).map_err(Failure::analysis)?;
    let schema = default_schema();
    let label = |name: &str| {
        schema
            .iter()
            .find(|v| v.name == name)
            .map_or_else(|| name.to_string(), Variable::label)
    };
    let mut t = Table::new(
        format!("Prediction: {}", model.name),
        vec![String::new(), "Coefficient".into(), "Input".into()],
    );
    t.rows.push(vec!["(Constant)".into(), spss_number(model.intercept, 3), String::new()]);
    for term in &model.terms {
        t.rows.push(vec![
            label(&term.variable),
            spss_number(term.coefficient, 3),
            inputs[&term.variable].to_string(),
        ]);
    }
    t.rows.push(vec![format!("Predicted {}", label(&model.response)), String::new(), spss_number(value, 3)]);
    let data = PredictionData {
        model: &model,
        inputs,
        prediction: value,
    };
    let mut r = Report::new("predict");
    r.push(Section {
        id: "prediction".into(),
        title: "Prediction".into(),
        tables: vec![t],
        data: serde_json::to_value(&data).expect("prediction serializes"),
    });
    Ok(r)
}

/// `report`: every section in analysis order.
pub fn cmd_report(cfg: &AnalysisConfig) -> CmdResult<Report> {
    let p = prepare(cfg)?;
    let d = &p.data;
    let all = all_names(d);
    let vars = cfg.names_or(&all, d);
    let grouped = cfg.names_or(&LEVENE_DEFAULT, d);
    let mut r = Report::new("report");
    r.push(cleaning_section(&p.cleaning));
    r.push(describe(d, &vars)?);
    r.push(distributions(d, &vars)?);
    r.push(homogeneity(d, &grouped, &cfg.group_scheme)?);
    r.push(anova(d, &grouped, &cfg.group_scheme)?);
    let mut subsets = vec![None];
    if let Some(f) = &cfg.filter {
        subsets.push(Some(f));
    }
    r.push(correlations(d, &vars, &subsets)?);
    let responses: Vec<&str> = match &cfg.response {
        Some(resp) => vec![resp.as_str()],
        None => [PV, LOAD].into_iter().filter(|v| d.variable(v).is_some()).collect(),
    };
    for response in responses {
        let candidates = candidates_for(cfg, response, d);
        r.push(regression(d, response, &candidates, cfg.p_enter)?.0);
    }
    Ok(r)
}

/// `synth`: writes a generated dataset with PV and load clamped into range.
pub fn cmd_synth(rows: usize, seed: u64, output: &Path) -> CmdResult<()> {
    let d = generate(&SynthConfig {
        rows,
        seed,
        clamp_outputs: true,
        ..SynthConfig::default()
    })
    .map_err(Failure::input)?;
    let file = std::fs::File::create(output)
        .map_err(|e| Failure::Input(format!("{}: {e}", output.display())))?;
    write_csv(&d, std::io::BufWriter::new(file)).map_err(Failure::input)
}

pub fn render(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Text => report.render_text(),
        OutputFormat::Json => report.render_json(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_layering() {
        let file = Settings {
            group_scheme: Some("bins:temperature_c:5".into()),
            p_enter: Some(0.1),
            ranges: Some(BTreeMap::from([("pv_kw".to_string(), [0.0, 30.0])])),
            ..Settings::default()
        };
        let flags = Settings {
            groups: Some(10),
            ..Settings::default()
        };
        let cfg = AnalysisConfig::resolve(Some(file), flags).unwrap();
        assert_eq!(cfg.group_scheme.to_string(), "index:10");
        assert_eq!(cfg.p_enter, 0.1);
        assert_eq!(cfg.ranges.get(PV), Some((0.0, 30.0)));
        assert_eq!(cfg.ranges.get(TEMPERATURE), Some((-10.0, 60.0)));
    }

    #[test]
    fn config_validation() {
        let flags = |s: Settings| AnalysisConfig::resolve(None, s);
        assert!(flags(Settings { p_enter: Some(1.5), ..Settings::default() }).is_err());
        assert!(flags(Settings { groups: Some(1), ..Settings::default() }).is_err());
        assert!(flags(Settings { outlier_rule: Some("bogus".into()), ..Settings::default() }).is_err());
        let e = flags(Settings { filter: Some("x".into()), ..Settings::default() }).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_INPUT);
    }

    #[test]
    fn toml_settings() {
        let s: Settings = toml::from_str(
            "input = \"data.csv\"\nformat = \"json\"\ngroups = 25\n[ranges]\ntemperature_c = [0, 50]\n",
        )
        .unwrap();
        assert_eq!(s.format, Some(OutputFormat::Json));
        assert_eq!(s.groups, Some(25));
        assert!(toml::from_str::<Settings>("unknown_key = 1").is_err());
    }

    #[test]
    fn predict_published() {
        let inputs = BTreeMap::from([
            (IRRADIANCE.to_string(), 500.0),
            (TEMPERATURE.to_string(), 30.0),
            (crate::dataset::RELATIVE_HUMIDITY.to_string(), 40.0),
            (crate::dataset::WIND_SPEED.to_string(), 10.0),
        ]);
        let r = cmd_predict(&ModelSource::Published("pv_model_4".into()), &inputs).unwrap();
        assert!(r.render_text().contains("10.378"));
        let e = cmd_predict(&ModelSource::Published("nope".into()), &inputs).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_ANALYSIS);
    }
}
