use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use greenstat::cli::{
    cmd_anova, cmd_clean, cmd_correlate, cmd_describe, cmd_levene, cmd_predict, cmd_regress,
    cmd_report, cmd_synth, render, AnalysisConfig, CmdResult, Failure, ModelSource, OutputFormat,
    Settings, EXIT_INPUT,
};
use greenstat::dataset::{DUST, IRRADIANCE, RELATIVE_HUMIDITY, TEMPERATURE, WIND_SPEED};
use greenstat::report::Report;
use greenstat::synth::{DEFAULT_ROWS, DEFAULT_SEED};

/// Statistical analysis of green-building weather, PV and load data.
#[derive(Parser, Debug)]
#[command(name = "greenstat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Input CSV (timestamp plus the seven schema columns).
    #[arg(long)]
    input: Option<PathBuf>,
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["text", "json"])]
    format: Option<String>,
    /// Outlier rule: none, tukey or tukey:K.
    #[arg(long)]
    outlier_rule: Option<String>,
    /// Number of row-index groups for Levene and ANOVA.
    #[arg(long)]
    groups: Option<usize>,
    /// Grouping scheme: index:K, bins:COLUMN:K or column:COLUMN.
    #[arg(long)]
    group_scheme: Option<String>,
    /// Row filter for correlations, e.g. "irradiance_wm2>0".
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    p_enter: Option<f64>,
    /// Regression response variable.
    #[arg(long)]
    response: Option<String>,
    /// Comma-separated regression candidates.
    #[arg(long, value_delimiter = ',')]
    candidates: Option<Vec<String>>,
    /// Comma-separated variables to analyse.
    #[arg(long, value_delimiter = ',')]
    variables: Option<Vec<String>>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Common {
    fn config(self) -> CmdResult<AnalysisConfig> {
        let file = self.config.as_deref().map(Settings::from_toml_path).transpose()?;
        let format = self
            .format
            .map(|f| f.parse::<OutputFormat>())
            .transpose()
            .map_err(|e| Failure::Input(e.to_string()))?;
        let flags = Settings {
            input: self.input,
            format,
            outlier_rule: self.outlier_rule,
            group_scheme: self.group_scheme,
            groups: self.groups,
            filter: self.filter,
            p_enter: self.p_enter,
            response: self.response,
            candidates: self.candidates,
            variables: self.variables,
            output_dir: self.output_dir,
            ranges: None,
        };
        AnalysisConfig::resolve(file, flags)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Clean the input and write cleaned.csv to the output directory.
    Clean(Common),
    /// Descriptive statistics per variable.
    Describe(Common),
    /// Pearson correlation matrix.
    Correlate(Common),
    /// Levene's test of homogeneity of variances.
    Levene(Common),
    /// One-way ANOVA across groups.
    Anova(Common),
    /// Forward stepwise regression.
    Regress {
        #[command(flatten)]
        common: Common,
        /// Write the final model as JSON.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Evaluate a published or fitted model.
    Predict(PredictArgs),
    /// All sections in analysis order.
    Report(Common),
    /// Write a synthetic dataset.
    Synth {
        #[arg(long, default_value_t = DEFAULT_ROWS)]
        rows: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Published model name (pv_model_4, load_model_2).
    #[arg(required_unless_present = "model_file", conflicts_with = "model_file")]
    model: Option<String>,
    /// Fitted model JSON written by `regress --model-out`.
    #[arg(long)]
    model_file: Option<PathBuf>,
    #[arg(long)]
    irradiance: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    relative_humidity: Option<f64>,
    #[arg(long)]
    wind_speed: Option<f64>,
    #[arg(long)]
    dust: Option<f64>,
    /// Any input as NAME=VALUE; repeatable.
    #[arg(long = "set", value_parser = parse_assignment)]
    set: Vec<(String, f64)>,
    #[arg(long, value_parser = ["text", "json"], default_value = "text")]
    format: String,
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got '{s}'"))?;
    let value = value.trim().parse().map_err(|_| format!("invalid number in '{s}'"))?;
    Ok((name.trim().to_string(), value))
}

fn emit(report: &Report, format: OutputFormat) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(render(report, format).as_bytes());
}

fn run(cli: Cli) -> CmdResult<()> {
    let with = |common: Common, f: fn(&AnalysisConfig) -> CmdResult<Report>| -> CmdResult<()> {
        let cfg = common.config()?;
        emit(&f(&cfg)?, cfg.format);
        Ok(())
    };
    match cli.command {
        Command::Clean(common) => {
            let cfg = common.config()?;
            let (report, path) = cmd_clean(&cfg)?;
            emit(&report, cfg.format);
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        Command::Describe(c) => with(c, cmd_describe),
        Command::Correlate(c) => with(c, cmd_correlate),
        Command::Levene(c) => with(c, cmd_levene),
        Command::Anova(c) => with(c, cmd_anova),
        Command::Report(c) => with(c, cmd_report),
        Command::Regress { common, model_out } => {
            let cfg = common.config()?;
            emit(&cmd_regress(&cfg, model_out.as_deref())?, cfg.format);
            Ok(())
        }
        Command::Predict(a) => {
            let source = match (a.model, a.model_file) {
                (_, Some(path)) => ModelSource::File(path),
                (Some(name), None) => ModelSource::Published(name),
                (None, None) => unreachable!("clap requires a model"),
            };
            let mut inputs = BTreeMap::new();
            for (name, value) in [
                (IRRADIANCE, a.irradiance),
                (TEMPERATURE, a.temperature),
                (RELATIVE_HUMIDITY, a.relative_humidity),
                (WIND_SPEED, a.wind_speed),
                (DUST, a.dust),
            ] {
                if let Some(v) = value {
                    inputs.insert(name.to_string(), v);
                }
            }
            inputs.extend(a.set);
            let format = a.format.parse().map_err(|e: greenstat::Error| Failure::Input(e.to_string()))?;
            emit(&cmd_predict(&source, &inputs)?, format);
            Ok(())
        }
        Command::Synth { rows, seed, output } => cmd_synth(rows, seed, &output),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
