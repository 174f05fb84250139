//! Textbook two-pass reference implementations. Deliberately naive: no
//! streaming updates, no shared code with the library.

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s
}

pub fn median(x: &[f64]) -> f64 {
    let s = sorted(x);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Most frequent value, smallest on ties, by quadratic counting.
pub fn mode(x: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    let mut best_count = 0;
    for &v in x {
        let c = x.iter().filter(|&&w| w == v).count();
        if c > best_count || (c == best_count && v < best) {
            best = v;
            best_count = c;
        }
    }
    best
}

pub fn trimmed_mean(x: &[f64], fraction: f64) -> f64 {
    let s = sorted(x);
    let k = (s.len() as f64 * fraction).floor() as usize;
    mean(&s[k..s.len() - k])
}

/// Adjusted Fisher-Pearson skewness n / ((n-1)(n-2)) * sum(((x - m) / s)^3).
pub fn skewness(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = mean(x);
    let s = variance(x).sqrt();
    n / ((n - 1.0) * (n - 2.0)) * x.iter().map(|v| ((v - m) / s).powi(3)).sum::<f64>()
}

pub fn se_skewness(n: usize) -> f64 {
    let n = n as f64;
    (6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0))).sqrt()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

/// One-way ANOVA F from the definitional sums of squares.
pub fn anova_f(groups: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let grand = mean(&all);
    let k = groups.len() as f64;
    let n = all.len() as f64;
    let between: f64 = groups.iter().map(|g| g.len() as f64 * (mean(g) - grand).powi(2)).sum();
    let within: f64 = groups
        .iter()
        .map(|g| {
            let m = mean(g);
            g.iter().map(|v| (v - m).powi(2)).sum::<f64>()
        })
        .sum();
    (between / (k - 1.0)) / (within / (n - k))
}

pub enum Center {
    Mean,
    Median,
    Trimmed,
}

pub fn levene_deviations(groups: &[Vec<f64>], center: Center) -> Vec<Vec<f64>> {
    groups
        .iter()
        .map(|g| {
            let c = match center {
                Center::Mean => mean(g),
                Center::Median => median(g),
                Center::Trimmed => trimmed_mean(g, 0.05),
            };
            g.iter().map(|v| (v - c).abs()).collect()
        })
        .collect()
}

/// Satterthwaite df of the median-centered deviations.
pub fn satterthwaite_df(z: &[Vec<f64>]) -> f64 {
    let u: Vec<(f64, f64)> = z
        .iter()
        .map(|g| {
            let m = mean(g);
            (g.iter().map(|v| (v - m).powi(2)).sum::<f64>(), g.len() as f64 - 1.0)
        })
        .collect();
    let num = u.iter().map(|(s, _)| s).sum::<f64>().powi(2);
    let den: f64 = u.iter().map(|(s, d)| s * s / d).sum();
    num / den
}

/// Two-tailed t tail probabilities in closed form for df 1 and 2.
pub fn t_two_tailed_closed(t: f64, df: u32) -> f64 {
    let t = t.abs();
    match df {
        1 => 1.0 - 2.0 / std::f64::consts::PI * t.atan(),
        2 => 1.0 - t / (2.0 + t * t).sqrt(),
        _ => unreachable!(),
    }
}

/// F upper tail in closed form for df1, df2 in {1, 2}.
pub fn f_upper_closed(f: f64, df1: u32, df2: u32) -> f64 {
    match (df1, df2) {
        (1, 1) => 1.0 - 2.0 / std::f64::consts::PI * f.sqrt().atan(),
        (1, 2) => t_two_tailed_closed(f.sqrt(), 2),
        (2, d2) => (1.0 + 2.0 * f / d2 as f64).powf(-(d2 as f64) / 2.0),
        _ => unreachable!(),
    }
}
