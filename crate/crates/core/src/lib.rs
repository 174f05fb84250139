//! Statistical engine for green-building energy time series.
//!
//! The crate covers the full analysis path from raw sensor CSV to fitted
//! prediction models:
//!
//! * [`dataset`]: CSV ingestion, range validation, listwise cleaning with
//!   Tukey-fence outlier removal, and row filters.
//! * [`special`]: log-gamma, regularized incomplete beta, and the t/F tail
//!   probabilities behind every significance column.
//! * [`descriptive`]: SPSS-compatible summaries, histograms and boxplots.
//! * [`inference`]: Pearson correlation, grouping, Levene's test (four
//!   centering variants) and one-way ANOVA.
//! * [`regression`]: QR-based least squares, forward stepwise selection,
//!   residual diagnostics and the published PV / load models.
//! * [`report`]: SPSS-layout text tables and JSON reports used by the CLI.
//! * [`synth`]: deterministic generators for weather, PV and load data.
//! * [`cli`]: the commands behind the `greenstat` binary and their exit codes.

pub mod cli;
pub mod dataset;
pub mod descriptive;
pub mod error;
pub mod inference;
pub mod regression;
pub mod report;
pub mod special;
pub mod synth;

pub use error::{Error, Result};
