//! Statistical checks: residual-sign randomness, a stagnation-vs-growth
//! verdict, and information-criterion model comparison.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::hypermodel::{fit_hyperbolic, goodness};
use crate::ingest::{select_range, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunsMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunsTest {
    pub runs_count: usize,
    pub p_value: f64,
    pub n_positive: usize,
    pub n_negative: usize,
    pub zeros_dropped: usize,
    pub method: RunsMethod,
}

fn binom(n: usize, k: i64) -> f64 {
    if k < 0 || k as usize > n {
        return 0.0;
    }
    let k = (k as usize).min(n - k as usize);
    let mut out = 1.0;
    for i in 0..k {
        out = out * (n - i) as f64 / (i + 1) as f64;
    }
    out
}

/// Number of arrangements of `a` positive and `b` negative signs forming
/// exactly `r` runs.
fn arrangements_with_runs(a: usize, b: usize, r: usize) -> f64 {
    if a == 0 || b == 0 {
        return if r == 1 { 1.0 } else { 0.0 };
    }
    if r < 2 || r > a + b {
        return 0.0;
    }
    if r.is_multiple_of(2) {
        let m = (r / 2) as i64;
        2.0 * binom(a - 1, m - 1) * binom(b - 1, m - 1)
    } else {
        let m = ((r - 1) / 2) as i64;
        binom(a - 1, m) * binom(b - 1, m - 1) + binom(a - 1, m - 1) * binom(b - 1, m)
    }
}

/// Two-sided runs-test p-value by exact enumeration of the run-count
/// distribution: the probability, over all arrangements of the signs, of a
/// run count at least as far from the mean `1 + 2ab/n` as the observed one.
/// The distance comparison is done in integers (scaled by `n`) so boundary
/// cases are never lost to rounding.
pub fn exact_runs_p(n_positive: usize, n_negative: usize, runs: usize) -> f64 {
    let (a, b) = (n_positive, n_negative);
    let n = a + b;
    if a == 0 || b == 0 {
        return 1.0;
    }
    let total = binom(n, a as i64);
    let center = (n + 2 * a * b) as i64;
    let dev = (runs as i64 * n as i64 - center).abs();
    let mut tail = 0.0;
    for r in 1..=n {
        if (r as i64 * n as i64 - center).abs() >= dev {
            tail += arrangements_with_runs(a, b, r);
        }
    }
    (tail / total).min(1.0)
}

/// Two-sided runs-test p-value from the normal approximation with mean
/// `1 + 2ab/n` and variance `2ab(2ab - n) / (n^2 (n-1))`. Both tails are
/// continuity-corrected at the nearest achievable integer run counts.
pub fn normal_runs_p(n_positive: usize, n_negative: usize, runs: usize) -> f64 {
    let (a, b) = (n_positive as f64, n_negative as f64);
    let n = a + b;
    if n_positive == 0 || n_negative == 0 {
        return 1.0;
    }
    let ab2 = 2.0 * a * b;
    let mean = 1.0 + ab2 / n;
    let var = ab2 * (ab2 - n) / (n * n * (n - 1.0));
    if var <= 0.0 {
        return 1.0;
    }
    let sigma = var.sqrt();
    let dev = (runs as f64 - mean).abs();
    let upper = (mean + dev).ceil();
    let lower = (mean - dev).floor();
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let p_hi = 1.0 - std_normal.cdf((upper - 0.5 - mean) / sigma);
    let p_lo = std_normal.cdf((lower + 0.5 - mean) / sigma);
    (p_hi + p_lo).clamp(0.0, 1.0)
}

/// Wald-Wolfowitz runs test on the signs of `residuals`. Zero residuals
/// carry no sign and are dropped (the count is reported). Exact enumeration
/// for up to 12 signed residuals, the normal approximation beyond.
pub fn runs_test(residuals: &[f64]) -> Result<RunsTest> {
    let signs: Vec<bool> = residuals
        .iter()
        .filter(|r| **r != 0.0)
        .map(|r| *r > 0.0)
        .collect();
    let zeros_dropped = residuals.len() - signs.len();
    let n = signs.len();
    if n < 5 {
        return Err(Error::InsufficientData(format!(
            "runs test needs at least 5 nonzero residuals, got {n}"
        )));
    }
    let n_positive = signs.iter().filter(|s| **s).count();
    let n_negative = n - n_positive;
    let runs_count = 1 + signs.windows(2).filter(|w| w[0] != w[1]).count();
    let (p_value, method) = if n <= 12 {
        (exact_runs_p(n_positive, n_negative, runs_count), RunsMethod::Exact)
    } else {
        (
            normal_runs_p(n_positive, n_negative, runs_count),
            RunsMethod::NormalApprox,
        )
    };
    Ok(RunsTest {
        runs_count,
        p_value,
        n_positive,
        n_negative,
        zeros_dropped,
        method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HyperbolicConsistent,
    StagnationConsistent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StagnationThresholds {
    /// Reciprocal-line r2 a monotone window must reach to count as
    /// hyperbolic-consistent.
    pub min_r2: f64,
    /// Runs-test p-value below which residual signs look non-random.
    pub runs_alpha: f64,
}

impl Default for StagnationThresholds {
    fn default() -> Self {
        StagnationThresholds {
            min_r2: 0.95,
            runs_alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagnationReport {
    pub window: (f64, f64),
    /// Number of points the verdict rests on; tiny windows make weak claims.
    pub n: usize,
    pub reciprocal_monotone_decreasing: bool,
    pub r2_reciprocal: Option<f64>,
    /// Runs statistics for residuals about the fitted reciprocal line;
    /// absent when fewer than 5 residuals carry a sign.
    pub runs_count: Option<usize>,
    pub runs_p_value: Option<f64>,
    pub verdict: Verdict,
}

/// Weighs a window of data against two readings: a hyperbolic trajectory
/// (reciprocals march down a straight line) versus stagnation (values
/// wobble randomly about a level). Monotone decreasing reciprocals with a
/// tight line make the first; non-monotone data whose residual signs pass
/// the runs test make the second; anything else is inconclusive.
pub fn stagnation_report(series: &TimeSeries, window: (f64, f64)) -> Result<StagnationReport> {
    stagnation_report_with(series, window, &StagnationThresholds::default())
}

pub fn stagnation_report_with(
    series: &TimeSeries,
    window: (f64, f64),
    thresholds: &StagnationThresholds,
) -> Result<StagnationReport> {
    let selected = select_range(series, window.0, window.1)?;
    if selected.len() < 3 {
        return Err(Error::Validation(format!(
            "stagnation verdict needs at least 3 points in the window, got {}",
            selected.len()
        )));
    }
    let reciprocals: Vec<f64> = selected.values().map(|v| 1.0 / v).collect();
    let monotone = reciprocals.windows(2).all(|w| w[1] < w[0]);
    let fit = fit_hyperbolic(series, window)?;
    let g = goodness(series, &fit, window)?;
    let residuals: Vec<f64> = g.residuals.iter().map(|&(_, r)| r).collect();
    let runs = match runs_test(&residuals) {
        Ok(rt) => Some(rt),
        Err(Error::InsufficientData(_)) => None,
        Err(e) => return Err(e),
    };
    let r2 = fit.r2_reciprocal;
    let verdict = if monotone && r2.is_some_and(|r| r >= thresholds.min_r2) {
        Verdict::HyperbolicConsistent
    } else if !monotone
        && runs
            .as_ref()
            .is_some_and(|rt| rt.p_value >= thresholds.runs_alpha)
    {
        Verdict::StagnationConsistent
    } else {
        Verdict::Inconclusive
    };
    Ok(StagnationReport {
        window,
        n: selected.len(),
        reciprocal_monotone_decreasing: monotone,
        r2_reciprocal: r2,
        runs_count: runs.as_ref().map(|rt| rt.runs_count),
        runs_p_value: runs.as_ref().map(|rt| rt.p_value),
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthModel {
    Hyperbolic,
    Exponential,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub name: GrowthModel,
    pub n_params: usize,
    /// Sum of squared log-space residuals; absent for infeasible models.
    pub rss_log: Option<f64>,
    pub aic: Option<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub window: (f64, f64),
    pub n: usize,
    pub models: Vec<ModelScore>,
    pub best: GrowthModel,
}

fn aic(n: usize, rss: f64, n_params: usize) -> f64 {
    n as f64 * (rss / n as f64).ln() + 2.0 * n_params as f64
}

/// Fits three growth laws to a window and ranks them by AIC. All models are
/// scored in log space, `rss_log = sum((ln S - ln S_hat)^2)`, so no model
/// is judged in its own home coordinates. The hyperbolic candidate is
/// marked infeasible and excluded when its fitted line is non-positive at
/// any data year in the window. Ties go to the model with fewer parameters.
pub fn compare_models(series: &TimeSeries, window: (f64, f64)) -> Result<ModelComparison> {
    let selected = select_range(series, window.0, window.1)?;
    if selected.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "model comparison needs at least 4 points in the window, got {}",
            selected.len()
        )));
    }
    let n = selected.len();
    let xs: Vec<f64> = selected.years().collect();
    let logs: Vec<f64> = selected.values().map(f64::ln).collect();

    let hyp_fit = fit_hyperbolic(series, window)?;
    let hyp_rss = if xs.iter().all(|&t| hyp_fit.line_at(t) > 0.0) {
        let rss = xs
            .iter()
            .zip(&logs)
            .map(|(&t, &l)| {
                let pred = (1.0 / hyp_fit.line_at(t)).ln();
                (l - pred) * (l - pred)
            })
            .sum::<f64>();
        Some(rss)
    } else {
        None
    };

    let (c0, c1) = crate::hypermodel::ols_line(&xs, &logs)?;
    let exp_rss = xs
        .iter()
        .zip(&logs)
        .map(|(&t, &l)| {
            let pred = c0 + c1 * t;
            (l - pred) * (l - pred)
        })
        .sum::<f64>();

    let mean_log = logs.iter().sum::<f64>() / n as f64;
    let const_rss = logs.iter().map(|&l| (l - mean_log) * (l - mean_log)).sum::<f64>();

    let score = |name, n_params, rss: Option<f64>| ModelScore {
        name,
        n_params,
        rss_log: rss,
        aic: rss.map(|r| aic(n, r, n_params)),
        feasible: rss.is_some(),
    };
    let models = vec![
        score(GrowthModel::Hyperbolic, 2, hyp_rss),
        score(GrowthModel::Exponential, 2, Some(exp_rss)),
        score(GrowthModel::Constant, 1, Some(const_rss)),
    ];

    let mut best: Option<&ModelScore> = None;
    for m in &models {
        if m.aic.is_none() {
            continue;
        }
        best = match best {
            None => Some(m),
            Some(b) => {
                let (ma, ba) = (m.aic.unwrap(), b.aic.unwrap());
                if ma < ba || (ma == ba && m.n_params < b.n_params) {
                    Some(m)
                } else {
                    Some(b)
                }
            }
        };
    }
    let best = best.expect("exponential and constant models are always feasible").name;
    Ok(ModelComparison {
        window,
        n,
        models,
        best,
    })
}
