//! Pipeline orchestration, consolidated JSON reporting, figure data export,
//! and a seeded synthetic-series generator.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hypermodel::{eval_model, fit_hyperbolic, singularity_time, HyperbolicFit};
use crate::hypotheses::{
    compare_models, stagnation_report_with, ModelComparison, StagnationReport,
    StagnationThresholds,
};
use crate::ingest::{parse_series, Point, SeriesSummary, TimeSeries};
use crate::regimes::{
    detect_decline, detect_divergence, singularity_margin, DeclineInterval, DivergenceConfig,
    DivergenceReport, SegmentationResult,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub region: String,
    /// Multiplier applied to raw CSV values; 0.001 turns millions into
    /// billions.
    pub unit_scale: f64,
    pub slow_window: (f64, f64),
    pub fast_window: (f64, f64),
    pub scan_from: f64,
    pub divergence: DivergenceConfig,
    pub stagnation: StagnationThresholds,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            region: "Latin America".into(),
            unit_scale: 0.001,
            slow_window: (1.0, 1500.0),
            fast_window: (1600.0, 1870.0),
            scan_from: 1870.0,
            divergence: DivergenceConfig::default(),
            stagnation: StagnationThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub a: f64,
    pub k: f64,
    /// `a / k`; absent when the fit is not growing.
    pub t_s: Option<f64>,
    pub t_s_rounded: Option<i64>,
    pub rss: f64,
    pub r2: Option<f64>,
    pub n: usize,
    pub window: (f64, f64),
}

impl FitReport {
    pub fn from_fit(fit: &HyperbolicFit) -> FitReport {
        let t_s = singularity_time(fit).ok();
        FitReport {
            a: fit.a,
            k: fit.k,
            t_s,
            t_s_rounded: t_s.map(|t| t.round() as i64),
            rss: fit.rss_reciprocal,
            r2: fit.r2_reciprocal,
            n: fit.n,
            window: fit.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool: String,
    pub tool_version: String,
    pub region: String,
    pub input_sha256: String,
    pub config: PipelineConfig,
    pub series: SeriesSummary,
    pub rows_skipped: usize,
    pub slow_fit: FitReport,
    pub fast_fit: FitReport,
    pub segmentation: SegmentationResult,
    pub declines: Vec<DeclineInterval>,
    pub divergence: Option<DivergenceReport>,
    pub singularity_margin_years: Option<f64>,
    pub stagnation: StagnationReport,
    pub model_comparison: ModelComparison,
}

/// Everything a caller needs after a pipeline run: the serializable report
/// plus the ingested series for figure export.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub report: AnalysisReport,
    pub series: TimeSeries,
}

/// Runs the full analysis against a CSV file. Stage failures carry the
/// stage name: ingest, fit-slow, fit-fast, segmentation, divergence,
/// stagnation, model-comparison.
pub fn run_pipeline(csv_path: impl AsRef<Path>, config: &PipelineConfig) -> Result<PipelineOutput> {
    let path = csv_path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let text = String::from_utf8(bytes).map_err(|_| {
        Error::stage("ingest", Error::Validation("input is not valid UTF-8".into()))
    })?;
    run_pipeline_on_text(&text, config)
}

/// The pipeline core, pure in the CSV text.
pub fn run_pipeline_on_text(csv_text: &str, config: &PipelineConfig) -> Result<PipelineOutput> {
    let stage = |name: &'static str| move |e: Error| Error::stage(name, e);

    let mut hasher = Sha256::new();
    hasher.update(csv_text.as_bytes());
    let digest = hasher.finalize();
    let input_sha256: String = digest.iter().map(|b| format!("{b:02x}")).collect();

    let parsed =
        parse_series(csv_text, &config.region, config.unit_scale).map_err(stage("ingest"))?;
    let series = parsed.series;

    let slow = fit_hyperbolic(&series, config.slow_window).map_err(stage("fit-slow"))?;
    let fast = fit_hyperbolic(&series, config.fast_window).map_err(stage("fit-fast"))?;

    let span = (config.slow_window.0, config.fast_window.1);
    let single = fit_hyperbolic(&series, span).map_err(stage("segmentation"))?;
    let combined_rss = slow.rss_reciprocal + fast.rss_reciprocal;
    let segmentation = SegmentationResult {
        break_year: config.fast_window.0,
        slow_fit: slow,
        fast_fit: fast,
        gap: (config.slow_window.1 < config.fast_window.0)
            .then_some((config.slow_window.1, config.fast_window.0)),
        combined_rss,
        single_fit_rss: single.rss_reciprocal,
        no_improvement: combined_rss >= single.rss_reciprocal * (1.0 - 1e-12),
    };

    let declines = detect_decline(&series);
    let divergence = detect_divergence(&series, &fast, config.scan_from, &config.divergence)
        .map_err(stage("divergence"))?;
    let singularity_margin_years = divergence
        .as_ref()
        .map(|d| singularity_margin(&fast, d))
        .transpose()
        .map_err(stage("divergence"))?;
    let stagnation = stagnation_report_with(&series, config.slow_window, &config.stagnation)
        .map_err(stage("stagnation"))?;
    let model_comparison =
        compare_models(&series, config.fast_window).map_err(stage("model-comparison"))?;

    let report = AnalysisReport {
        tool: "hypergrowth".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        region: series.region().to_string(),
        input_sha256,
        config: config.clone(),
        series: series.summary(),
        rows_skipped: parsed.rows_skipped,
        slow_fit: FitReport::from_fit(&slow),
        fast_fit: FitReport::from_fit(&fast),
        segmentation,
        declines,
        divergence,
        singularity_margin_years,
        stagnation,
        model_comparison,
    };
    Ok(PipelineOutput { report, series })
}

/// Stable JSON rendering of a report: fixed key order, shortest
/// round-trip float formatting, trailing newline. Byte-identical across
/// runs on identical input.
pub fn render_report_json(report: &AnalysisReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig1,
    Fig2,
}

/// Renders figure-ready CSV. Fig1 carries the observed values and both
/// model curves on a dense one-year grid; model cells are empty at and
/// beyond a pole, noted in a leading comment. Fig2 carries observed
/// reciprocals and the two fitted lines, which are defined everywhere.
pub fn render_figure(output: &PipelineOutput, which: Figure) -> String {
    let slow = &output.report.segmentation.slow_fit;
    let fast = &output.report.segmentation.fast_fit;
    let points = output.series.points();
    let first = points[0].year;
    let last = points[points.len() - 1].year;

    let mut grid: Vec<f64> = points.iter().map(|p| p.year).collect();
    let mut y = first;
    while y <= last {
        grid.push(y);
        y += 1.0;
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let observed_at = |year: f64| -> Option<f64> {
        points
            .binary_search_by(|p| p.year.total_cmp(&year))
            .ok()
            .map(|i| points[i].value)
    };

    let mut body = String::new();
    let mut slow_truncated = false;
    let mut fast_truncated = false;
    match which {
        Figure::Fig1 => {
            for &year in &grid {
                let obs = observed_at(year).map(|v| v.to_string()).unwrap_or_default();
                let slow_cell = match eval_model(slow, year) {
                    Ok(v) => v.to_string(),
                    Err(_) => {
                        slow_truncated = true;
                        String::new()
                    }
                };
                let fast_cell = match eval_model(fast, year) {
                    Ok(v) => v.to_string(),
                    Err(_) => {
                        fast_truncated = true;
                        String::new()
                    }
                };
                body.push_str(&format!("{year},{obs},{slow_cell},{fast_cell}\n"));
            }
        }
        Figure::Fig2 => {
            for &year in &grid {
                let obs = observed_at(year)
                    .map(|v| (1.0 / v).to_string())
                    .unwrap_or_default();
                body.push_str(&format!(
                    "{year},{obs},{},{}\n",
                    slow.line_at(year),
                    fast.line_at(year)
                ));
            }
        }
    }

    let mut out = String::new();
    if slow_truncated {
        out.push_str("# gdp_slow_model is empty at and beyond the fitted pole\n");
    }
    if fast_truncated {
        out.push_str("# gdp_fast_model is empty at and beyond the fitted pole\n");
    }
    out.push_str(match which {
        Figure::Fig1 => "year,gdp_observed,gdp_slow_model,gdp_fast_model\n",
        Figure::Fig2 => "year,reciprocal_observed,line_slow,line_fast\n",
    });
    out.push_str(&body);
    out
}

pub fn export_figure_data(
    output: &PipelineOutput,
    which: Figure,
    out_path: impl AsRef<Path>,
) -> Result<()> {
    let path = out_path.as_ref();
    std::fs::write(path, render_figure(output, which))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SimulateKind {
    /// Values on `1/(a - k*t)`.
    Hyperbolic { a: f64, k: f64 },
    /// Values wobbling uniformly within `level * (1 +/- amplitude)`.
    Stagnation { level: f64, amplitude: f64 },
    /// First regime through `break_year` inclusive, second after it.
    Broken {
        first: (f64, f64),
        second: (f64, f64),
        break_year: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulateSpec {
    pub kind: SimulateKind,
    pub start: f64,
    pub end: f64,
    pub step: f64,
    /// Sigma of multiplicative log-normal noise, `value * exp(sigma * z)`.
    pub noise_rel: f64,
    pub seed: u64,
}

/// Generates a deterministic synthetic series from a seeded ChaCha8
/// generator. Draws happen per point in year order: the stagnation wobble
/// first where applicable, then the noise deviate when `noise_rel > 0`.
pub fn simulate_series(spec: &SimulateSpec) -> Result<TimeSeries> {
    if !spec.start.is_finite() || !spec.end.is_finite() || spec.start >= spec.end {
        return Err(Error::Validation(format!(
            "grid start {} must precede end {}",
            spec.start, spec.end
        )));
    }
    if !(spec.step > 0.0) || !spec.step.is_finite() {
        return Err(Error::Validation(format!(
            "grid step must be positive, got {}",
            spec.step
        )));
    }
    if !(spec.noise_rel >= 0.0) || !spec.noise_rel.is_finite() {
        return Err(Error::Validation(format!(
            "noise sigma must be non-negative, got {}",
            spec.noise_rel
        )));
    }
    match spec.kind {
        SimulateKind::Hyperbolic { a, k } => {
            if !a.is_finite() || !k.is_finite() {
                return Err(Error::Validation("model parameters must be finite".into()));
            }
        }
        SimulateKind::Stagnation { level, amplitude } => {
            if !(level > 0.0) || !level.is_finite() {
                return Err(Error::Validation(format!(
                    "stagnation level must be positive, got {level}"
                )));
            }
            if !(0.0..1.0).contains(&amplitude) {
                return Err(Error::Validation(format!(
                    "fluctuation amplitude must lie in [0, 1), got {amplitude}"
                )));
            }
        }
        SimulateKind::Broken { break_year, .. } => {
            if !break_year.is_finite() {
                return Err(Error::Validation("break year must be finite".into()));
            }
        }
    }

    let n = ((spec.end - spec.start) / spec.step).floor() as usize + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let year = spec.start + i as f64 * spec.step;
        let base = match spec.kind {
            SimulateKind::Hyperbolic { a, k } => hyperbolic_value(a, k, year)?,
            SimulateKind::Stagnation { level, amplitude } => {
                let u: f64 = rng.random_range(-1.0..1.0);
                level * (1.0 + amplitude * u)
            }
            SimulateKind::Broken {
                first,
                second,
                break_year,
            } => {
                let (a, k) = if year <= break_year { first } else { second };
                hyperbolic_value(a, k, year)?
            }
        };
        let value = if spec.noise_rel > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            base * (spec.noise_rel * z).exp()
        } else {
            base
        };
        points.push(Point { year, value });
    }
    TimeSeries::new("simulated", points)
}

fn hyperbolic_value(a: f64, k: f64, t: f64) -> Result<f64> {
    let denom = a - k * t;
    if !(denom > 0.0) {
        return Err(Error::Validation(format!(
            "parameters put year {t} at or past the singularity"
        )));
    }
    Ok(1.0 / denom)
}
