//! Deterministic generator of Qatar-like hourly weather, PV and load series.
//!
//! Weather is drawn as a correlated Gaussian vector (Cholesky factor of the
//! target correlation matrix), mapped affinely and clamped to the default
//! ranges. The affine map of each variable is calibrated on the drawn sample
//! so the clamped column hits the target mean and sd. PV and load follow the
//! published models plus Gaussian noise.

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::{default_schema, Dataset, RangeSpec, DUST, IRRADIANCE, LOAD, PV, RELATIVE_HUMIDITY, TEMPERATURE, WIND_SPEED};
use crate::descriptive::Moments;
use crate::error::{Error, Result};
use crate::regression::{PublishedModel, Predictor};

pub const DEFAULT_SEED: u64 = 20141101;
pub const DEFAULT_ROWS: usize = 6830;

#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub name: &'static str,
    pub mean: f64,
    pub sd: f64,
}

/// Target marginals and correlation matrix of the five weather variables.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherProfile {
    pub marginals: [Marginal; 5],
    pub correlation: [[f64; 5]; 5],
}

impl Default for WeatherProfile {
    fn default() -> Self {
        let m = |name, mean, sd| Marginal { name, mean, sd };
        WeatherProfile {
            marginals: [
                m(TEMPERATURE, 29.72, 8.59),
                m(RELATIVE_HUMIDITY, 45.35, 18.50),
                m(IRRADIANCE, 464.17, 376.76),
                m(DUST, 0.561, 0.250),
                m(WIND_SPEED, 7.336, 6.955),
            ],
            correlation: [
                [1.0, -0.5, 0.273, 0.1, 0.0],
                [-0.5, 1.0, -0.409, 0.1, 0.0],
                [0.273, -0.409, 1.0, -0.1, -0.15],
                [0.1, 0.1, -0.1, 1.0, 0.1],
                [0.0, 0.0, -0.15, 0.1, 1.0],
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub rows: usize,
    pub seed: u64,
    pub start: NaiveDateTime,
    pub profile: WeatherProfile,
    /// Population R-square of PV on the four model predictors.
    pub pv_r2: f64,
    pub load_noise_sd: f64,
    /// Clamp PV and load into their default ranges.
    pub clamp_outputs: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            rows: DEFAULT_ROWS,
            seed: DEFAULT_SEED,
            start: NaiveDate::from_ymd_opt(2014, 11, 1)
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .expect("valid start date"),
            profile: WeatherProfile::default(),
            pv_r2: 0.73,
            load_noise_sd: 7.25,
            clamp_outputs: false,
        }
    }
}

/// Lower-triangular L with L L^T = a.
fn cholesky<const N: usize>(a: &[[f64; N]; N]) -> Result<[[f64; N]; N]> {
    let mut l = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 {
                    return Err(Error::Validation("correlation matrix is not positive definite".into()));
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Finds `a + b z` clamped to `[lo, hi]` whose sample mean and sd equal the
/// target, by fixed-point iteration on the given draws.
fn calibrated_column(z: &[f64], target: &Marginal, lo: f64, hi: f64) -> Vec<f64> {
    let mut a = target.mean;
    let mut b = target.sd;
    let map = |a: f64, b: f64| -> Vec<f64> { z.iter().map(|v| (a + b * v).clamp(lo, hi)).collect() };
    for _ in 0..200 {
        let m: Moments = map(a, b).into_iter().collect();
        let (mean, sd) = (m.mean(), m.variance().sqrt());
        if (mean - target.mean).abs() < 1e-12 * target.sd && (sd - target.sd).abs() < 1e-12 * target.sd {
            break;
        }
        if sd > 0.0 {
            b *= target.sd / sd;
        }
        a += target.mean - mean;
    }
    map(a, b)
}

/// Five weather columns in the profile's order.
pub fn weather(profile: &WeatherProfile, rows: usize, rng: &mut ChaCha8Rng) -> Result<[Vec<f64>; 5]> {
    let l = cholesky(&profile.correlation)?;
    let mut latent: [Vec<f64>; 5] = Default::default();
    for _ in 0..rows {
        let e: [f64; 5] = std::array::from_fn(|_| StandardNormal.sample(rng));
        for i in 0..5 {
            latent[i].push((0..=i).map(|k| l[i][k] * e[k]).sum());
        }
    }
    let ranges = RangeSpec::default();
    let mut out: [Vec<f64>; 5] = Default::default();
    for (i, m) in profile.marginals.iter().enumerate() {
        let (lo, hi) = ranges.get(m.name).unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
        out[i] = calibrated_column(&latent[i], m, lo, hi);
    }
    Ok(out)
}

/// Generates a complete dataset in the default schema.
pub fn generate(config: &SynthConfig) -> Result<Dataset> {
    if config.rows == 0 {
        return Err(Error::Validation("synthetic row count must be positive".into()));
    }
    if !(config.pv_r2 > 0.0 && config.pv_r2 < 1.0) {
        return Err(Error::Validation(format!("pv_r2 must lie in (0, 1), got {}", config.pv_r2)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let columns = weather(&config.profile, config.rows, &mut rng)?;
    let column = |name: &str| -> &[f64] {
        let i = config.profile.marginals.iter().position(|m| m.name == name);
        &columns[i.expect("profile covers the weather schema")]
    };

    let signal = |model: PublishedModel| -> Vec<f64> {
        let intercept = model.intercept();
        let terms = model.terms();
        (0..config.rows)
            .map(|r| intercept + terms.iter().map(|(v, c)| c * column(v)[r]).sum::<f64>())
            .collect()
    };
    let pv_signal = signal(PublishedModel::PvModel4);
    let signal_var = pv_signal.iter().copied().collect::<Moments>().variance();
    let pv_sd = (signal_var * (1.0 - config.pv_r2) / config.pv_r2).sqrt();
    let pv_noise = Normal::new(0.0, pv_sd).map_err(|e| Error::Validation(e.to_string()))?;
    let load_noise =
        Normal::new(0.0, config.load_noise_sd).map_err(|e| Error::Validation(e.to_string()))?;

    let ranges = RangeSpec::default();
    let clamp = |name: &str, v: f64| match (config.clamp_outputs, ranges.get(name)) {
        (true, Some((lo, hi))) => v.clamp(lo, hi),
        _ => v,
    };
    let pv: Vec<f64> = pv_signal
        .iter()
        .map(|s| clamp(PV, s + pv_noise.sample(&mut rng)))
        .collect();
    let load: Vec<f64> = signal(PublishedModel::LoadModel2)
        .iter()
        .map(|s| clamp(LOAD, s + load_noise.sample(&mut rng)))
        .collect();

    let timestamps = (0..config.rows)
        .map(|i| config.start + Duration::hours(i as i64))
        .collect();
    let schema = default_schema();
    let data = schema
        .iter()
        .map(|v| match v.name.as_str() {
            PV => pv.clone(),
            LOAD => load.clone(),
            name => column(name).to_vec(),
        })
        .collect();
    Dataset::from_complete(timestamps, schema, data)
}
