//! Time-series dataset model, CSV ingestion and the cleaning pipeline.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::descriptive::quantile_sorted;
use crate::error::{Error, Result};

pub const TIMESTAMP: &str = "timestamp";
pub const TEMPERATURE: &str = "temperature_c";
pub const RELATIVE_HUMIDITY: &str = "relative_humidity_pct";
pub const IRRADIANCE: &str = "irradiance_wm2";
pub const DUST: &str = "dust_mgm3";
pub const WIND_SPEED: &str = "wind_speed_kmh";
pub const PV: &str = "pv_kw";
pub const LOAD: &str = "load_kw";

/// Weather predictors in the column order of the CSV schema.
pub const WEATHER_VARIABLES: [&str; 5] = [TEMPERATURE, RELATIVE_HUMIDITY, IRRADIANCE, DUST, WIND_SPEED];

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S%.f";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    Celsius,
    Percent,
    WattsPerSquareMetre,
    MilligramsPerCubicMetre,
    KilometresPerHour,
    Kilowatts,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Celsius => "°C",
            Unit::Percent => "%",
            Unit::WattsPerSquareMetre => "W/m²",
            Unit::MilligramsPerCubicMetre => "mg/m³",
            Unit::KilometresPerHour => "km/h",
            Unit::Kilowatts => "kW",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Weather,
    Generation,
    Load,
}

/// A named, unit-tagged measurement column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub unit: Unit,
    pub role: Role,
}

impl Variable {
    pub fn new(name: impl Into<String>, unit: Unit, role: Role) -> Self {
        Self {
            name: name.into(),
            unit,
            role,
        }
    }

    /// Human label used in report headers, e.g. `Temperature (°C)`.
    pub fn label(&self) -> String {
        let base = match self.name.as_str() {
            TEMPERATURE => "Temperature",
            RELATIVE_HUMIDITY => "Relative Humidity",
            IRRADIANCE => "Irradiance",
            DUST => "Dust",
            WIND_SPEED => "Wind Speed",
            PV => "PV",
            LOAD => "Load",
            other => other,
        };
        format!("{base} ({})", self.unit.symbol())
    }
}

/// The seven-column schema of the bundled energy data.
pub fn default_schema() -> Vec<Variable> {
    vec![
        Variable::new(TEMPERATURE, Unit::Celsius, Role::Weather),
        Variable::new(RELATIVE_HUMIDITY, Unit::Percent, Role::Weather),
        Variable::new(IRRADIANCE, Unit::WattsPerSquareMetre, Role::Weather),
        Variable::new(DUST, Unit::MilligramsPerCubicMetre, Role::Weather),
        Variable::new(WIND_SPEED, Unit::KilometresPerHour, Role::Weather),
        Variable::new(PV, Unit::Kilowatts, Role::Generation),
        Variable::new(LOAD, Unit::Kilowatts, Role::Load),
    ]
}

/// Immutable table of timestamped, possibly-missing numeric columns.
///
/// Invariants: variable names are unique, every column has `row_count`
/// entries and timestamps are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    timestamps: Vec<NaiveDateTime>,
    variables: Vec<Variable>,
    columns: Vec<Vec<Option<f64>>>,
}

impl Dataset {
    pub fn new(
        timestamps: Vec<NaiveDateTime>,
        variables: Vec<Variable>,
        columns: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if variables.len() != columns.len() {
            return Err(Error::Validation(format!(
                "{} variables but {} columns",
                variables.len(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        for v in &variables {
            if !seen.insert(v.name.as_str()) {
                return Err(Error::Validation(format!("duplicate variable '{}'", v.name)));
            }
        }
        for (v, c) in variables.iter().zip(&columns) {
            if c.len() != timestamps.len() {
                return Err(Error::Validation(format!(
                    "column '{}' has {} entries, expected {}",
                    v.name,
                    c.len(),
                    timestamps.len()
                )));
            }
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "timestamps not strictly increasing at row {} ({})",
                i + 1,
                timestamps[i + 1].format(TIMESTAMP_FORMAT)
            )));
        }
        Ok(Self {
            timestamps,
            variables,
            columns,
        })
    }

    /// Builds a dataset of complete columns.
    pub fn from_complete(
        timestamps: Vec<NaiveDateTime>,
        variables: Vec<Variable>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let columns = columns
            .into_iter()
            .map(|c| c.into_iter().map(Some).collect())
            .collect();
        Self::new(timestamps, variables, columns)
    }

    pub fn row_count(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.index_of(name).map(|i| &self.variables[i])
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.index_of(name).map(|i| self.columns[i].as_slice())
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::Validation(format!("unknown variable '{name}'")))
    }

    /// Values of a complete column. Fails on unknown names or if any cell
    /// is missing.
    pub fn values(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.require(name)?;
        self.columns[idx]
            .iter()
            .enumerate()
            .map(|(row, v)| {
                v.ok_or_else(|| {
                    Error::Validation(format!("variable '{name}' has a missing value at row {row}"))
                })
            })
            .collect()
    }

    pub fn missing_count(&self) -> usize {
        self.columns.iter().flatten().filter(|v| v.is_none()).count()
    }

    /// Sub-dataset of the given rows, in the given order (which must keep
    /// timestamps increasing).
    pub(crate) fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            timestamps: rows.iter().map(|&r| self.timestamps[r]).collect(),
            variables: self.variables.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
        }
    }
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.naive_utc());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt);
        }
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

fn parse_cell(raw: &str) -> Option<f64> {
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::Parse {
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        _ => Error::Parse {
            line,
            message: e.to_string(),
        },
    }
}

/// Reads a CSV with a `timestamp` column plus one column per schema
/// variable. Empty or non-numeric cells become missing values; rows are
/// sorted by timestamp.
pub fn load_csv<R: Read>(source: R, schema: &[Variable]) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers = reader.headers().map_err(csv_error)?.clone();
    let mut ts_col = None;
    let mut var_cols = vec![None; schema.len()];
    for (i, h) in headers.iter().enumerate() {
        if h == TIMESTAMP {
            ts_col = Some(i);
        } else if let Some(j) = schema.iter().position(|v| v.name == h) {
            if var_cols[j].is_some() {
                return Err(Error::Schema(format!("header '{h}' appears more than once")));
            }
            var_cols[j] = Some(i);
        } else {
            return Err(Error::Schema(format!("unknown header '{h}'")));
        }
    }
    let ts_col = ts_col.ok_or_else(|| Error::Schema(format!("missing header '{TIMESTAMP}'")))?;
    let var_cols: Vec<usize> = var_cols
        .iter()
        .zip(schema)
        .map(|(c, v)| c.ok_or_else(|| Error::Schema(format!("missing header '{}'", v.name))))
        .collect::<Result<_>>()?;

    let mut rows: Vec<(NaiveDateTime, Vec<Option<f64>>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let raw_ts = &record[ts_col];
        let ts = parse_timestamp(raw_ts).ok_or_else(|| Error::Parse {
            line,
            message: format!("invalid timestamp '{raw_ts}'"),
        })?;
        let cells = var_cols.iter().map(|&c| parse_cell(&record[c])).collect();
        rows.push((ts, cells));
    }

    rows.sort_by_key(|(ts, _)| *ts);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Validation(format!(
            "duplicate timestamp {}",
            w[0].0.format(TIMESTAMP_FORMAT)
        )));
    }

    let mut columns = vec![Vec::with_capacity(rows.len()); schema.len()];
    let mut timestamps = Vec::with_capacity(rows.len());
    for (ts, cells) in rows {
        timestamps.push(ts);
        for (col, cell) in columns.iter_mut().zip(cells) {
            col.push(cell);
        }
    }
    Dataset::new(timestamps, schema.to_vec(), columns)
}

pub fn load_csv_path(path: impl AsRef<Path>, schema: &[Variable]) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    load_csv(std::io::BufReader::new(file), schema)
}

/// Writes the dataset in the same CSV layout `load_csv` accepts. Values
/// use the shortest representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(d: &Dataset, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec![TIMESTAMP.to_string()];
    header.extend(d.variables.iter().map(|v| v.name.clone()));
    w.write_record(&header).map_err(csv_error)?;
    let mut record = Vec::with_capacity(header.len());
    for row in 0..d.row_count() {
        record.clear();
        record.push(d.timestamps[row].format(TIMESTAMP_FORMAT).to_string());
        for col in &d.columns {
            record.push(col[row].map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Closed admissible interval per variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    bounds: BTreeMap<String, (f64, f64)>,
}

impl Default for RangeSpec {
    fn default() -> Self {
        let mut spec = RangeSpec::empty();
        for (name, lo, hi) in [
            (TEMPERATURE, -10.0, 60.0),
            (RELATIVE_HUMIDITY, 0.0, 100.0),
            (IRRADIANCE, 0.0, 1500.0),
            (DUST, 0.0, 5.0),
            (WIND_SPEED, 0.0, 150.0),
            (PV, 0.0, 40.0),
            (LOAD, 0.0, 80.0),
        ] {
            spec.bounds.insert(name.to_string(), (lo, hi));
        }
        spec
    }
}

impl RangeSpec {
    pub fn empty() -> Self {
        Self {
            bounds: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: impl Into<String>, lo: f64, hi: f64) -> Result<Self> {
        let name = name.into();
        if !(lo <= hi) {
            return Err(Error::Validation(format!(
                "range for '{name}' has lo > hi ({lo} > {hi})"
            )));
        }
        self.bounds.insert(name, (lo, hi));
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        self.bounds.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, (f64, f64))> {
        self.bounds.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeViolation {
    pub row: usize,
    pub variable: String,
    pub value: f64,
}

/// Cells strictly outside their variable's interval. Variables without an
/// interval and missing cells are never violations.
pub fn validate_ranges(d: &Dataset, spec: &RangeSpec) -> Vec<RangeViolation> {
    let mut out = Vec::new();
    for row in 0..d.row_count() {
        for (var, col) in d.variables.iter().zip(&d.columns) {
            let (Some((lo, hi)), Some(v)) = (spec.get(&var.name), col[row]) else {
                continue;
            };
            if v < lo || v > hi {
                out.push(RangeViolation {
                    row,
                    variable: var.name.clone(),
                    value: v,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OutlierRule {
    None,
    Tukey(f64),
}

impl Default for OutlierRule {
    fn default() -> Self {
        OutlierRule::Tukey(1.5)
    }
}

impl OutlierRule {
    /// Fence multiplier, if the rule removes outliers.
    pub fn tukey_k(self) -> Option<f64> {
        match self {
            OutlierRule::None => None,
            OutlierRule::Tukey(k) => Some(k),
        }
    }
}

impl FromStr for OutlierRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") {
            return Ok(OutlierRule::None);
        }
        if s.eq_ignore_ascii_case("tukey") {
            return Ok(OutlierRule::Tukey(1.5));
        }
        if let Some(k) = s.strip_prefix("tukey:") {
            let k: f64 = k
                .trim()
                .parse()
                .map_err(|_| Error::Validation(format!("invalid Tukey multiplier '{k}'")))?;
            if !(k > 0.0) {
                return Err(Error::Validation(format!("Tukey multiplier must be > 0, got {k}")));
            }
            return Ok(OutlierRule::Tukey(k));
        }
        Err(Error::Validation(format!(
            "unknown outlier rule '{s}' (expected none or tukey:K)"
        )))
    }
}

impl fmt::Display for OutlierRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tukey_k() {
            None => write!(f, "none"),
            Some(k) => write!(f, "tukey:{k}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VariableDrops {
    pub variable: String,
    pub missing: usize,
    pub out_of_range: usize,
    pub outlier: usize,
}

/// Stage counts of a cleaning run. A row dropped at one stage is not
/// counted again later; per-variable counts can exceed the row totals
/// because one row may fail on several variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub rows_in: usize,
    pub rows_out: usize,
    pub dropped_missing: usize,
    pub dropped_out_of_range: usize,
    pub dropped_outlier: usize,
    pub per_variable: Vec<VariableDrops>,
    /// Set when every row was removed.
    pub empty: bool,
}

/// Listwise cleaning: drops rows with missing cells, then rows with
/// out-of-range cells, then rows outside Tukey fences on any variable
/// (fences computed on the rows that survived the first two stages).
pub fn clean(d: &Dataset, spec: &RangeSpec, rule: OutlierRule) -> Result<(Dataset, CleaningReport)> {
    let k = rule.tukey_k();
    if let Some(k) = k {
        if !(k > 0.0) {
            return Err(Error::Domain(format!("Tukey multiplier must be > 0, got {k}")));
        }
    }

    let mut per_variable: Vec<VariableDrops> = d
        .variables
        .iter()
        .map(|v| VariableDrops {
            variable: v.name.clone(),
            ..Default::default()
        })
        .collect();

    let mut keep: Vec<usize> = Vec::with_capacity(d.row_count());
    for row in 0..d.row_count() {
        let mut bad = false;
        for (j, col) in d.columns.iter().enumerate() {
            if col[row].is_none() {
                per_variable[j].missing += 1;
                bad = true;
            }
        }
        if !bad {
            keep.push(row);
        }
    }
    let dropped_missing = d.row_count() - keep.len();

    let before = keep.len();
    keep.retain(|&row| {
        let mut ok = true;
        for (j, (var, col)) in d.variables.iter().zip(&d.columns).enumerate() {
            if let (Some((lo, hi)), Some(v)) = (spec.get(&var.name), col[row]) {
                if v < lo || v > hi {
                    per_variable[j].out_of_range += 1;
                    ok = false;
                }
            }
        }
        ok
    });
    let dropped_out_of_range = before - keep.len();

    let before = keep.len();
    if let (Some(k), false) = (k, keep.is_empty()) {
        let fences: Vec<(f64, f64)> = d
            .columns
            .iter()
            .map(|col| {
                let mut vals: Vec<f64> = keep.iter().filter_map(|&r| col[r]).collect();
                vals.sort_by(f64::total_cmp);
                let q1 = quantile_sorted(&vals, 0.25);
                let q3 = quantile_sorted(&vals, 0.75);
                let iqr = q3 - q1;
                (q1 - k * iqr, q3 + k * iqr)
            })
            .collect();
        keep.retain(|&row| {
            let mut ok = true;
            for (j, col) in d.columns.iter().enumerate() {
                let v = col[row].expect("missing values removed in stage one");
                let (lo, hi) = fences[j];
                if v < lo || v > hi {
                    per_variable[j].outlier += 1;
                    ok = false;
                }
            }
            ok
        });
    }
    let dropped_outlier = before - keep.len();

    let cleaned = d.select_rows(&keep);
    let report = CleaningReport {
        rows_in: d.row_count(),
        rows_out: cleaned.row_count(),
        dropped_missing,
        dropped_out_of_range,
        dropped_outlier,
        per_variable,
        empty: cleaned.is_empty(),
    };
    Ok((cleaned, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Gt,
    Ge,
    Lt,
    Le,
    Eq,
    Ne,
}

impl CmpOp {
    fn apply(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

/// `variable op value`, e.g. `irradiance_wm2 > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub variable: String,
    pub op: CmpOp,
    pub value: f64,
}

/// Conjunction of comparisons. The empty filter accepts every row.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RowFilter {
    pub comparisons: Vec<Comparison>,
}

impl RowFilter {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn and(mut self, variable: impl Into<String>, op: CmpOp, value: f64) -> Self {
        self.comparisons.push(Comparison {
            variable: variable.into(),
            op,
            value,
        });
        self
    }
}

impl FromStr for Comparison {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        // two-character operators first so ">=" is not read as ">"
        const OPS: [(&str, CmpOp); 7] = [
            (">=", CmpOp::Ge),
            ("<=", CmpOp::Le),
            ("==", CmpOp::Eq),
            ("!=", CmpOp::Ne),
            (">", CmpOp::Gt),
            ("<", CmpOp::Lt),
            ("=", CmpOp::Eq),
        ];
        for (sym, op) in OPS {
            if let Some((lhs, rhs)) = s.split_once(sym) {
                let variable = lhs.trim();
                let value: f64 = rhs.trim().parse().map_err(|_| {
                    Error::Validation(format!("invalid number '{}' in filter '{s}'", rhs.trim()))
                })?;
                if variable.is_empty() {
                    return Err(Error::Validation(format!("filter '{s}' has no variable")));
                }
                return Ok(Comparison {
                    variable: variable.to_string(),
                    op,
                    value,
                });
            }
        }
        Err(Error::Validation(format!("filter '{s}' has no comparison operator")))
    }
}

impl FromStr for RowFilter {
    type Err = Error;

    /// Comma-separated comparisons, all of which must hold.
    fn from_str(s: &str) -> Result<Self> {
        let comparisons = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        Ok(RowFilter { comparisons })
    }
}

impl fmt::Display for RowFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .comparisons
            .iter()
            .map(|c| format!("{}{}{}", c.variable, c.op.symbol(), c.value))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Rows on which every comparison holds; a missing cell fails its
/// comparison. Row order is preserved.
pub fn filter_rows(d: &Dataset, filter: &RowFilter) -> Result<Dataset> {
    let resolved: Vec<(usize, &Comparison)> = filter
        .comparisons
        .iter()
        .map(|c| d.require(&c.variable).map(|i| (i, c)))
        .collect::<Result<_>>()?;
    let rows: Vec<usize> = (0..d.row_count())
        .filter(|&row| {
            resolved
                .iter()
                .all(|(i, c)| d.columns[*i][row].is_some_and(|v| c.op.apply(v, c.value)))
        })
        .collect();
    Ok(d.select_rows(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str =
        "timestamp,temperature_c,relative_humidity_pct,irradiance_wm2,dust_mgm3,wind_speed_kmh,pv_kw,load_kw\n";

    fn csv_of(rows: &[&str]) -> String {
        let mut s = HEADER.to_string();
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    fn load(text: &str) -> Result<Dataset> {
        load_csv(text.as_bytes(), &default_schema())
    }

    fn one_var(values: &[Option<f64>]) -> Dataset {
        let start = NaiveDate::from_ymd_opt(2014, 11, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let ts = (0..values.len())
            .map(|i| start + chrono::Duration::hours(i as i64))
            .collect();
        Dataset::new(
            ts,
            vec![Variable::new("x", Unit::Kilowatts, Role::Load)],
            vec![values.to_vec()],
        )
        .unwrap()
    }

    #[test]
    fn loads_well_formed_rows() {
        let d = load(&csv_of(&[
            "2014-11-01T00:00:00,25.1,40,0,0.5,3.2,0,12.5",
            "2014-11-01T01:00:00,24.8,42,0,0.5,3.0,0,12.1",
            "2014-11-01T02:00:00,24.0,45,10,0.6,2.1,0.2,11.8",
        ]))
        .unwrap();
        assert_eq!(d.row_count(), 3);
        assert_eq!(d.values(PV).unwrap(), vec![0.0, 0.0, 0.2]);
        assert_eq!(d.missing_count(), 0);
    }

    #[test]
    fn empty_and_junk_cells_are_missing() {
        let d = load(&csv_of(&[
            "2014-11-01T00:00:00,25.1,40,,0.5,3.2,0,12.5",
            "2014-11-01T01:00:00,24.8,n/a,5,0.5,3.0,0,12.1",
        ]))
        .unwrap();
        assert_eq!(d.column(IRRADIANCE).unwrap(), &[None, Some(5.0)]);
        assert_eq!(d.column(RELATIVE_HUMIDITY).unwrap(), &[Some(40.0), None]);
        assert_eq!(d.missing_count(), 2);
        assert!(d.values(IRRADIANCE).is_err());
    }

    #[test]
    fn rows_are_sorted_by_timestamp() {
        let d = load(&csv_of(&[
            "2014-11-01T02:00:00,3,0,0,0,0,0,0",
            "2014-11-01T00:00:00,1,0,0,0,0,0,0",
            "2014-11-01 01:00:00,2,0,0,0,0,0,0",
        ]))
        .unwrap();
        assert_eq!(d.values(TEMPERATURE).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn header_errors() {
        let text = "timestamp,temperature_c,relative_humidity_pct,irradiance_wm2,dust_mgm3,wind_speed_kmh,load_kw\n";
        assert!(matches!(load(text), Err(Error::Schema(m)) if m.contains("pv_kw")));
        let text = HEADER.replace("load_kw", "load_kw,snow");
        assert!(matches!(load(&text), Err(Error::Schema(m)) if m.contains("snow")));
        let text = HEADER.replace("timestamp,", "time,");
        assert!(matches!(load(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = load(&csv_of(&[
            "2014-11-01T00:00:00,25.1,40,0,0.5,3.2,0,12.5",
            "2014-11-01T01:00:00,24.8,42,0,0.5,3.0",
        ]))
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn bad_timestamp_and_duplicates() {
        let err = load(&csv_of(&["yesterday,1,0,0,0,0,0,0"])).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = load(&csv_of(&[
            "2014-11-01T00:00:00,1,0,0,0,0,0,0",
            "2014-11-01T00:00:00,2,0,0,0,0,0,0",
        ]))
        .unwrap_err();
        assert!(matches!(err, Error::Validation(m) if m.contains("duplicate")));
    }

    #[test]
    fn dataset_invariants_enforced() {
        let t0 = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let v = vec![Variable::new("a", Unit::Celsius, Role::Weather)];
        assert!(Dataset::new(vec![t0, t0], v.clone(), vec![vec![None, None]]).is_err());
        assert!(Dataset::new(vec![t0], v.clone(), vec![vec![None, None]]).is_err());
        let vv = vec![v[0].clone(), v[0].clone()];
        assert!(Dataset::new(vec![t0], vv, vec![vec![None], vec![None]]).is_err());
    }

    #[test]
    fn validate_ranges_examples() {
        let spec = RangeSpec::empty().with("x", 0.0, 100.0).unwrap();
        assert!(validate_ranges(&one_var(&[Some(92.43), Some(100.0), Some(0.0)]), &spec).is_empty());
        let spec = RangeSpec::empty().with("x", -10.0, 60.0).unwrap();
        let v = validate_ranges(&one_var(&[Some(20.0), Some(-20.0), None]), &spec);
        assert_eq!(
            v,
            vec![RangeViolation {
                row: 1,
                variable: "x".into(),
                value: -20.0
            }]
        );
        assert!(validate_ranges(&one_var(&[]), &spec).is_empty());
        assert!(RangeSpec::empty().with("x", 2.0, 1.0).is_err());
    }

    #[test]
    fn default_ranges_bracket_observed_extremes() {
        let spec = RangeSpec::default();
        for (name, lo, hi) in [
            (TEMPERATURE, 8.45, 54.90),
            (RELATIVE_HUMIDITY, 0.0, 92.43),
            (IRRADIANCE, 0.0, 1338.71),
            (DUST, 0.02, 3.00),
            (WIND_SPEED, 0.0, 116.09),
            (PV, 0.0, 28.827),
        ] {
            let (a, b) = spec.get(name).unwrap();
            assert!(a <= lo && hi <= b, "{name}");
        }
    }

    #[test]
    fn clean_identity_on_good_data() {
        let vals: Vec<Option<f64>> = (0..10).map(|i| Some(i as f64)).collect();
        let d = one_var(&vals);
        let (c, r) = clean(&d, &RangeSpec::empty(), OutlierRule::None).unwrap();
        assert_eq!(c, d);
        assert_eq!((r.rows_in, r.rows_out), (10, 10));
        assert_eq!(r.dropped_missing + r.dropped_out_of_range + r.dropped_outlier, 0);
    }

    #[test]
    fn clean_drops_missing() {
        let d = one_var(&[Some(1.0), Some(2.0), None, Some(4.0), Some(5.0)]);
        let (c, r) = clean(&d, &RangeSpec::empty(), OutlierRule::None).unwrap();
        assert_eq!(c.row_count(), 4);
        assert_eq!(r.dropped_missing, 1);
        assert_eq!(r.per_variable[0].missing, 1);
        assert_eq!(c.missing_count(), 0);
    }

    #[test]
    fn clean_tukey_small_sample_keeps_large_value() {
        // quartiles by the (n+1)p rule are 1.5 and 52, upper fence 127.75
        let d = one_var(&[Some(1.0), Some(2.0), Some(3.0), Some(4.0), Some(100.0)]);
        let (c, r) = clean(&d, &RangeSpec::empty(), OutlierRule::Tukey(1.5)).unwrap();
        assert_eq!(c.row_count(), 5);
        assert_eq!(r.dropped_outlier, 0);
    }

    #[test]
    fn clean_tukey_drops_outlier() {
        // q1 = 2.75, q3 = 8.25, upper fence 16.5
        let mut vals: Vec<Option<f64>> = (1..=9).map(|i| Some(i as f64)).collect();
        vals.push(Some(100.0));
        let d = one_var(&vals);
        let (c, r) = clean(&d, &RangeSpec::empty(), OutlierRule::Tukey(1.5)).unwrap();
        assert_eq!(c.row_count(), 9);
        assert_eq!(r.dropped_outlier, 1);
        assert!(!c.values("x").unwrap().contains(&100.0));
    }

    #[test]
    fn clean_stage_order_and_empty_flag() {
        let spec = RangeSpec::empty().with("x", 0.0, 10.0).unwrap();
        let d = one_var(&[None, Some(50.0), Some(-1.0)]);
        let (c, r) = clean(&d, &spec, OutlierRule::Tukey(1.5)).unwrap();
        assert_eq!(c.row_count(), 0);
        assert!(r.empty);
        assert_eq!((r.dropped_missing, r.dropped_out_of_range, r.dropped_outlier), (1, 2, 0));
        assert!(clean(&d, &spec, OutlierRule::Tukey(0.0)).is_err());
    }

    #[test]
    fn outlier_rule_parsing() {
        assert_eq!("none".parse::<OutlierRule>().unwrap(), OutlierRule::None);
        assert_eq!("tukey:3".parse::<OutlierRule>().unwrap(), OutlierRule::Tukey(3.0));
        assert_eq!("tukey".parse::<OutlierRule>().unwrap().tukey_k(), Some(1.5));
        assert!("tukey:-1".parse::<OutlierRule>().is_err());
        assert!("zscore".parse::<OutlierRule>().is_err());
        assert_eq!(OutlierRule::default().tukey_k(), Some(1.5));
    }

    #[test]
    fn filter_examples() {
        let d = one_var(&[Some(0.0), Some(10.0), Some(0.0), Some(250.0)]);
        let f: RowFilter = "x>0".parse().unwrap();
        let out = filter_rows(&d, &f).unwrap();
        assert_eq!(out.values("x").unwrap(), vec![10.0, 250.0]);
        assert_eq!(filter_rows(&d, &RowFilter::all()).unwrap(), d);
        let f: RowFilter = "snow > 1".parse().unwrap();
        assert!(matches!(filter_rows(&d, &f), Err(Error::Validation(_))));
        let f: RowFilter = "x >= 10, x < 100".parse().unwrap();
        assert_eq!(filter_rows(&d, &f).unwrap().values("x").unwrap(), vec![10.0]);
        assert!("x ~ 3".parse::<RowFilter>().is_err());
        assert!("x > abc".parse::<RowFilter>().is_err());
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        let cell = prop_oneof![
            1 => Just(None),
            8 => (-20.0f64..120.0).prop_map(Some),
        ];
        (1usize..40)
            .prop_flat_map(move |n| prop::collection::vec(prop::collection::vec(cell.clone(), n), 7))
            .prop_map(|cols| {
                let n = cols[0].len();
                let start = NaiveDate::from_ymd_opt(2014, 11, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
                let ts = (0..n).map(|i| start + chrono::Duration::minutes(7 * i as i64)).collect();
                Dataset::new(ts, default_schema(), cols).unwrap()
            })
    }

    proptest! {
        #[test]
        fn csv_round_trip(d in arb_dataset()) {
            let mut buf = Vec::new();
            write_csv(&d, &mut buf).unwrap();
            let back = load_csv(buf.as_slice(), &default_schema()).unwrap();
            prop_assert_eq!(back, d);
        }

        #[test]
        fn cleaning_properties(d in arb_dataset(), tukey in proptest::bool::ANY) {
            let spec = RangeSpec::default();
            let rule = if tukey { OutlierRule::Tukey(1.5) } else { OutlierRule::None };
            let (c, r) = clean(&d, &spec, rule).unwrap();
            prop_assert_eq!(r.rows_out, r.rows_in - r.dropped_missing - r.dropped_out_of_range - r.dropped_outlier);
            prop_assert_eq!(c.missing_count(), 0);
            prop_assert!(validate_ranges(&c, &spec).is_empty());
            let (c2, r2) = clean(&c, &spec, rule).unwrap();
            prop_assert_eq!(r2.dropped_missing, 0);
            prop_assert_eq!(r2.dropped_out_of_range, 0);
            if !tukey {
                prop_assert_eq!(c2, c);
            }
        }

        #[test]
        fn filter_never_grows(d in arb_dataset(), cut in -20.0f64..120.0) {
            let f = RowFilter::all().and(TEMPERATURE, CmpOp::Gt, cut);
            let out = filter_rows(&d, &f).unwrap();
            prop_assert!(out.row_count() <= d.row_count());
            let all_hold = d.column(TEMPERATURE).unwrap().iter().all(|v| v.is_some_and(|v| v > cut));
            prop_assert_eq!(out.row_count() == d.row_count(), all_hold);
        }
    }
}
