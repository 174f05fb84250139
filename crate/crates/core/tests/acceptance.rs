//! Acceptance suite. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits nonzero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use common::oracle;
use greenstat::dataset::{
    DUST, IRRADIANCE, LOAD, PV, RELATIVE_HUMIDITY, TEMPERATURE, WEATHER_VARIABLES, WIND_SPEED,
};
use greenstat::descriptive::summarize;
use greenstat::inference::{anova_oneway, correlation_matrix, levene, pearson, GroupedSeries, LeveneVariant};
use greenstat::regression::{
    adjusted_r2, f_change_from_r2, ols_fit_columns, predict, stepwise_forward, OlsFit, Predictor,
    PublishedModel,
};
use greenstat::special::{f_upper_p, reg_inc_beta, t_two_tailed_p};
use greenstat::synth::{generate, SynthConfig};

type Outcome = Result<String, String>;

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn close(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    check((got - want).abs() <= tol, || format!("{what}: got {got}, want {want} ± {tol}"))
}

/// Relative error with a unit floor on the denominator.
fn rel_close(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    check((got - want).abs() <= tol * want.abs().max(1.0), || {
        format!("{what}: got {got}, want {want} (rel tol {tol})")
    })
}

fn inputs(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn prediction_fixtures() -> Outcome {
    let pv = PublishedModel::PvModel4;
    let load = PublishedModel::LoadModel2;
    let x = inputs(&[(IRRADIANCE, 500.0), (TEMPERATURE, 30.0), (RELATIVE_HUMIDITY, 40.0), (WIND_SPEED, 10.0)]);
    let y_pv = predict(&pv, &x).map_err(|e| e.to_string())?;
    close(y_pv, 10.378, 1e-9, "pv_model_4")?;
    let y_load = predict(&load, &inputs(&[(TEMPERATURE, 30.0), (RELATIVE_HUMIDITY, 40.0)]))
        .map_err(|e| e.to_string())?;
    close(y_load, 8.334, 1e-9, "load_model_2")?;
    let zero = |m: PublishedModel| {
        let z: BTreeMap<String, f64> = m.terms().iter().map(|(v, _)| (v.to_string(), 0.0)).collect();
        predict(&m, &z).map_err(|e| e.to_string())
    };
    check(zero(pv)? == 7.468, || "pv intercept-only input".into())?;
    check(zero(load)? == 15.614, || "load intercept-only input".into())?;
    Ok(format!("pv {y_pv:.3}, load {y_load:.3}"))
}

fn cross_table_identities() -> Outcome {
    close(adjusted_r2(0.711, 6830, 1), 0.711, 0.0005, "adjusted R²")?;
    let f = f_change_from_r2(0.016, 0.727, 6827);
    check((f / 394.375 - 1.0).abs() <= 0.02, || format!("F change {f} vs 394.375"))?;
    check((f / 19.859f64.powi(2) - 1.0).abs() <= 0.02, || format!("F change {f} vs t²"))?;
    close(-26.778973 / 3.886880, -6.890, 0.001, "t of model 4 constant")?;
    close(6.399605 / 7.486917, 0.855, 0.001, "R as sd ratio")?;
    close(-11.381020 / 7.246513, -1.571, 0.001, "load ratio")?;
    let se_skew = summarize(&two_point(6830, 1.0))
        .map_err(|e| e.to_string())?
        .se_skewness
        .ok_or("se_skewness absent")?;
    close(se_skew, 0.030, 0.0005, "se_skewness(6830)")?;
    let se_irr = summarize(&two_point(6830, 376.76118)).map_err(|e| e.to_string())?.se_mean;
    close(se_irr, 4.55886, 0.0005, "se_mean irradiance")?;
    Ok(format!("F change {f:.3}, se_mean {se_irr:.5}"))
}

/// Even-length sample with sample sd exactly `sd`.
fn two_point(n: usize, sd: f64) -> Vec<f64> {
    let a = sd * ((n - 1) as f64 / n as f64).sqrt();
    (0..n).map(|i| if i % 2 == 0 { a } else { -a }).collect()
}

fn published_misprints() -> Outcome {
    let f = f_change_from_r2(0.711, 0.711, 6828);
    let t2 = 129.621f64.powi(2);
    check((t2 - 16801.6).abs() <= 0.01 * 16801.6, || format!("t² {t2}"))?;
    check((f / t2 - 1.0).abs() <= 0.01, || format!("computed F change {f} vs t² {t2}"))?;
    check((f - 18801.538).abs() > 0.01 * 18801.538, || format!("F change {f} matches the printed 18801.538"))?;
    let se_t = summarize(&two_point(6830, 8.59091)).map_err(|e| e.to_string())?.se_mean;
    close(se_t, 0.10395, 0.000005, "se_mean temperature")?;
    check((se_t - 1.0395).abs() > 0.5, || "se_mean matches the printed 1.0395".into())?;
    Ok(format!("F change {f:.1} ≠ 18801.538, se_mean {se_t:.5} ≠ 1.0395"))
}

fn random_sample(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let loc = rng.random_range(-50.0..50.0);
    let scale = rng.random_range(0.1..20.0);
    let normal = Normal::new(loc, scale).unwrap();
    // every third sample is rounded so ties exercise the mode
    let round = rng.random_range(0..3) == 0;
    (0..n)
        .map(|_| {
            let v: f64 = normal.sample(rng);
            if round {
                (v * 2.0).round() / 2.0
            } else {
                v
            }
        })
        .collect()
}

fn oracle_equivalence() -> Outcome {
    let tol = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut grouped = 0;
    for trial in 0..1000 {
        let n = rng.random_range(8..=200);
        let x = random_sample(&mut rng, n);
        let at = |what: &str| format!("trial {trial} {what}");

        let s = summarize(&x).map_err(|e| format!("trial {trial}: {e}"))?;
        rel_close(s.mean, oracle::mean(&x), tol, &at("mean"))?;
        rel_close(s.variance, oracle::variance(&x), tol, &at("variance"))?;
        rel_close(s.sd, oracle::variance(&x).sqrt(), tol, &at("sd"))?;
        rel_close(s.se_mean, (oracle::variance(&x) / n as f64).sqrt(), tol, &at("se_mean"))?;
        rel_close(s.median, oracle::median(&x), tol, &at("median"))?;
        check(s.mode == oracle::mode(&x), || at("mode"))?;
        rel_close(s.trimmed_mean, oracle::trimmed_mean(&x, 0.05), tol, &at("trimmed mean"))?;
        rel_close(s.skewness.ok_or_else(|| at("skewness absent"))?, oracle::skewness(&x), tol, &at("skewness"))?;
        rel_close(s.se_skewness.unwrap_or(f64::NAN), oracle::se_skewness(n), tol, &at("se_skewness"))?;
        let sorted = oracle::sorted(&x);
        check(s.min == sorted[0] && s.max == sorted[n - 1], || at("min/max"))?;
        rel_close(s.range, sorted[n - 1] - sorted[0], tol, &at("range"))?;

        let y: Vec<f64> = x
            .iter()
            .map(|v| rng.random_range(-1.0..1.0) * 5.0 + v * rng.random_range(-1.0..1.0))
            .collect();
        let r = pearson(&x, &y).map_err(|e| format!("trial {trial}: {e}"))?.r;
        rel_close(r, oracle::pearson(&x, &y), tol, &at("pearson"))?;

        let k = rng.random_range(2..=6.min(n / 2));
        let mut cuts: Vec<usize> = (0..k - 1).map(|_| rng.random_range(2..=n - 2)).collect();
        cuts.sort_unstable();
        let groups: Vec<Vec<f64>> = std::iter::once(0)
            .chain(cuts.iter().copied())
            .zip(cuts.iter().copied().chain(std::iter::once(n)))
            .filter(|(a, b)| b > a)
            .map(|(a, b)| x[a..b].to_vec())
            .collect();
        if groups.len() < 2 || groups.iter().any(|g| g.len() < 2) {
            continue;
        }
        grouped += 1;
        let g = GroupedSeries::from_values(groups.clone()).map_err(|e| e.to_string())?;
        let a = anova_oneway(&g).map_err(|e| format!("trial {trial}: {e}"))?;
        rel_close(a.f, oracle::anova_f(&groups), tol, &at("anova F"))?;

        for variant in LeveneVariant::ALL {
            let center = match variant {
                LeveneVariant::Mean => oracle::Center::Mean,
                LeveneVariant::Median | LeveneVariant::MedianAdjustedDf => oracle::Center::Median,
                LeveneVariant::TrimmedMean => oracle::Center::Trimmed,
            };
            let z = oracle::levene_deviations(&groups, center);
            let l = levene(&g, variant).map_err(|e| format!("trial {trial}: {e}"))?;
            rel_close(l.statistic, oracle::anova_f(&z), tol, &at(variant.label()))?;
            if variant == LeveneVariant::MedianAdjustedDf {
                rel_close(l.df2, oracle::satterthwaite_df(&z), tol, &at("Satterthwaite df"))?;
            }
        }
    }
    Ok(format!("1000 arrays ({grouped} grouped), tol 1e-10 relative"))
}

fn design(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
    (0..p)
        .map(|j| {
            let scale = 10f64.powi(j as i32 - 1);
            let normal = Normal::new(j as f64, scale).unwrap();
            (0..n).map(|_| normal.sample(rng)).collect()
        })
        .collect()
}

fn fit(y: &[f64], x: &[Vec<f64>]) -> Result<OlsFit, String> {
    let names: Vec<String> = (0..x.len()).map(|j| format!("x{j}")).collect();
    let cols: Vec<(&str, &[f64])> = names.iter().map(String::as_str).zip(x.iter().map(Vec::as_slice)).collect();
    ols_fit_columns("y", y, &cols).map_err(|e| e.to_string())
}

fn regression_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let beta = [2.5, -1.25, 0.5, 3.0e-2];
    let combine = |x: &[Vec<f64>], i: usize| beta[0] + (0..3).map(|j| beta[j + 1] * x[j][i]).sum::<f64>();

    let mut worst_exact: f64 = 0.0;
    for _ in 0..20 {
        let x = design(&mut rng, 60, 3);
        let y: Vec<f64> = (0..60).map(|i| combine(&x, i)).collect();
        let f = fit(&y, &x)?;
        for (b, want) in f.b.iter().zip(beta) {
            worst_exact = worst_exact.max((b - want).abs() / want.abs().max(1.0));
        }
    }
    check(worst_exact <= 1e-8, || format!("noiseless recovery error {worst_exact:e}"))?;

    let noise = Normal::new(0.0, 2.0).unwrap();
    let (mut inside, mut total) = (0usize, 0usize);
    let mut worst_orth: f64 = 0.0;
    for _ in 0..500 {
        let n = 100;
        let x = design(&mut rng, n, 3);
        let y: Vec<f64> = (0..n).map(|i| combine(&x, i) + noise.sample(&mut rng)).collect();
        let f = fit(&y, &x)?;
        for ((b, se), want) in f.b.iter().zip(&f.se_b).zip(beta) {
            total += 1;
            inside += usize::from((b - want).abs() <= 3.0 * se);
        }
        let e = &f.residuals;
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let ones = vec![1.0; n];
        for col in std::iter::once(&ones).chain(&x) {
            let dot: f64 = e.iter().zip(col).map(|(a, b)| a * b).sum();
            worst_orth = worst_orth.max(dot.abs() / (norm(e) * norm(col)));
        }
    }
    let share = inside as f64 / total as f64;
    check(share >= 0.99, || format!("{inside}/{total} coefficients within 3·se"))?;
    check(worst_orth <= 1e-8, || format!("residual orthogonality {worst_orth:e}"))?;
    Ok(format!(
        "exact {worst_exact:.1e}, within 3·se {:.2}%, orthogonality {worst_orth:.1e}",
        100.0 * share
    ))
}

fn stepwise_reproduction() -> Outcome {
    let d = generate(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let candidates = |response: &str| -> Vec<&str> {
        WEATHER_VARIABLES.iter().copied().filter(|v| *v != response).collect()
    };

    let pv = stepwise_forward(&d, PV, &candidates(PV), 0.05).map_err(|e| e.to_string())?;
    let entered = pv.entered();
    check(entered.first() == Some(&IRRADIANCE), || format!("PV entry order {entered:?}"))?;
    let f = pv.final_fit().ok_or("no PV model")?;
    let model = PublishedModel::PvModel4;
    for (variable, want) in model.terms() {
        let i = f
            .predictors
            .iter()
            .position(|p| p == variable)
            .ok_or_else(|| format!("{variable} did not enter the PV model"))?;
        let (b, se) = (f.b[i + 1], f.se_b[i + 1]);
        check((b - want).abs() <= 3.0 * se, || format!("{variable}: b {b} vs {want}, se {se}"))?;
    }
    check((f.r2 - 0.73).abs() < 0.02, || format!("PV R² {}", f.r2))?;

    let load = stepwise_forward(&d, LOAD, &candidates(LOAD), 0.05).map_err(|e| e.to_string())?;
    let mut got = load.entered();
    got.sort_unstable();
    let mut want = vec![TEMPERATURE, RELATIVE_HUMIDITY];
    want.sort_unstable();
    check(got == want, || format!("load entered {got:?}"))?;

    let all = [PV, LOAD, TEMPERATURE, RELATIVE_HUMIDITY, IRRADIANCE, DUST, WIND_SPEED];
    let m = correlation_matrix(&d, &all, None).map_err(|e| e.to_string())?;
    for (a, b, sign) in [
        (PV, TEMPERATURE, 1.0),
        (PV, RELATIVE_HUMIDITY, -1.0),
        (PV, WIND_SPEED, -1.0),
        (PV, DUST, -1.0),
        (LOAD, TEMPERATURE, -1.0),
    ] {
        let r = m.get(a, b).ok_or("missing cell")?.r;
        check(r * sign > 0.0, || format!("sign of r({a}, {b}) = {r}"))?;
    }
    Ok(format!("PV entered {entered:?} R² {:.3}; load entered {:?}", f.r2, load.entered()))
}

fn special_functions() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let x = 10f64.powf(-3.0 + 6.0 * i as f64 / 199.0);
        for df in [1u32, 2] {
            let p = t_two_tailed_p(x, df as f64).map_err(|e| e.to_string())?.value;
            worst = worst.max((p - oracle::t_two_tailed_closed(x, df)).abs());
        }
        for (d1, d2) in [(1u32, 1u32), (1, 2), (2, 1), (2, 2)] {
            let p = f_upper_p(x, d1 as f64, d2 as f64).map_err(|e| e.to_string())?.value;
            worst = worst.max((p - oracle::f_upper_closed(x, d1, d2)).abs());
        }
    }
    check(worst <= 1e-10, || format!("closed-form error {worst:e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_sym: f64 = 0.0;
    for _ in 0..1000 {
        let a = 10f64.powf(rng.random_range(-1.0..2.5));
        let b = 10f64.powf(rng.random_range(-1.0..2.5));
        let x: f64 = rng.random_range(0.0..1.0);
        let lhs = reg_inc_beta(a, b, x).map_err(|e| e.to_string())?;
        let rhs = 1.0 - reg_inc_beta(b, a, 1.0 - x).map_err(|e| e.to_string())?;
        worst_sym = worst_sym.max((lhs - rhs).abs());
    }
    check(worst_sym <= 1e-12, || format!("beta symmetry error {worst_sym:e}"))?;
    Ok(format!("closed forms {worst:.1e}, symmetry {worst_sym:.1e}"))
}

fn run(args: &[&str]) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(common::bin()).args(args).output().map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn determinism_and_cli() -> Outcome {
    let csv = common::bundled_csv();
    let csv = csv.to_str().ok_or("non-UTF-8 path")?;
    for format in ["text", "json"] {
        let args = ["report", "--input", csv, "--format", format];
        let (c1, a) = run(&args)?;
        let (c2, b) = run(&args)?;
        check(c1 == 0 && c2 == 0, || format!("report {format} exit codes {c1}, {c2}"))?;
        check(!a.is_empty() && a == b, || format!("report {format} output differs between runs"))?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let header = std::fs::read_to_string(common::bundled_csv())
        .map_err(|e| e.to_string())?
        .lines()
        .next()
        .unwrap_or_default()
        .to_string();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, format!("{header}\n")).map_err(|e| e.to_string())?;
    let empty = empty.to_str().ok_or("non-UTF-8 path")?;
    let missing = dir.path().join("missing.csv");
    let missing = missing.to_str().ok_or("non-UTF-8 path")?;

    let cases: [(&[&str], i32); 6] = [
        (&["describe", "--input", csv], 0),
        (&["describe", "--input", missing], 2),
        (&["describe", "--input", csv, "--p-enter", "2"], 2),
        (&["no-such-command"], 2),
        (&["describe", "--input", empty], 3),
        (&["describe", "--input", csv, "--variables", "nope"], 4),
    ];
    for (args, want) in cases {
        let (code, _) = run(args)?;
        check(code == want, || format!("{args:?} exited {code}, want {want}"))?;
    }
    Ok("byte-identical text and JSON; exit codes 0, 2, 3, 4".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("prediction fixtures", prediction_fixtures),
        ("cross-table identities", cross_table_identities),
        ("published misprints", published_misprints),
        ("oracle equivalence", oracle_equivalence),
        ("regression recovery", regression_recovery),
        ("stepwise reproduction", stepwise_reproduction),
        ("special functions", special_functions),
        ("determinism and CLI", determinism_and_cli),
    ];
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let outcome = criterion();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {} {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {} {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
