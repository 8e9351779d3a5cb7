//! Multi-regime structure: breakpoint search, decline intervals, and
//! divergence from a fitted trajectory.
//!
//! Divergence works in reciprocal space, where the model is a straight
//! line: a point sits above the line exactly when its growth runs slower
//! than the fitted curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypermodel::{fit_point_slice, singularity_time, HyperbolicFit, POLE_GUARD};
use crate::ingest::{Point, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationResult {
    pub break_year: f64,
    pub slow_fit: HyperbolicFit,
    pub fast_fit: HyperbolicFit,
    /// Years deliberately excluded between the two regimes, if any.
    pub gap: Option<(f64, f64)>,
    pub combined_rss: f64,
    pub single_fit_rss: f64,
    /// True when splitting gains essentially nothing over one line.
    pub no_improvement: bool,
}

/// Exhaustive breakpoint search. Each candidate year splits the series into
/// points at or before it and points strictly after it; both sides are fitted
/// independently and the candidate with the smallest summed reciprocal-space
/// rss wins. Ties go to the earliest candidate.
pub fn find_breakpoint(
    series: &TimeSeries,
    candidates: &[f64],
    min_points_per_side: usize,
) -> Result<SegmentationResult> {
    if min_points_per_side < 2 {
        return Err(Error::Validation(format!(
            "need at least 2 points per side to fit a line, got {min_points_per_side}"
        )));
    }
    if candidates.is_empty() {
        return Err(Error::Validation("no breakpoint candidates given".into()));
    }
    if candidates.iter().any(|c| !c.is_finite()) {
        return Err(Error::Validation(
            "breakpoint candidates must be finite".into(),
        ));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();

    let points = series.points();
    let mut best: Option<(f64, HyperbolicFit, HyperbolicFit, f64)> = None;
    for &c in &sorted {
        let split = points.partition_point(|p| p.year <= c);
        if split < min_points_per_side || points.len() - split < min_points_per_side {
            continue;
        }
        let (left, right) = points.split_at(split);
        let left_fit = fit_point_slice(left, (left[0].year, left[left.len() - 1].year))?;
        let right_fit = fit_point_slice(right, (right[0].year, right[right.len() - 1].year))?;
        let rss = left_fit.rss_reciprocal + right_fit.rss_reciprocal;
        if best.as_ref().is_none_or(|b| rss < b.3) {
            best = Some((c, left_fit, right_fit, rss));
        }
    }
    let (break_year, slow_fit, fast_fit, combined_rss) = best.ok_or_else(|| {
        Error::Validation(format!(
            "no candidate leaves {min_points_per_side} points on each side"
        ))
    })?;

    let single = fit_point_slice(points, (points[0].year, points[points.len() - 1].year))?;
    let single_fit_rss = single.rss_reciprocal;
    let no_improvement = combined_rss >= single_fit_rss * (1.0 - 1e-12);
    Ok(SegmentationResult {
        break_year,
        slow_fit,
        fast_fit,
        gap: None,
        combined_rss,
        single_fit_rss,
        no_improvement,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeclineInterval {
    pub start_year: f64,
    pub end_year: f64,
    pub start_value: f64,
    pub end_value: f64,
}

/// Maximal runs of strictly decreasing values. Adjacent decreasing steps
/// merge into one interval; plateaus and rises end a run.
pub fn detect_decline(series: &TimeSeries) -> Vec<DeclineInterval> {
    let points = series.points();
    let mut intervals = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 1..points.len() {
        if points[i].value < points[i - 1].value {
            run_start.get_or_insert(i - 1);
        } else if let Some(s) = run_start.take() {
            intervals.push(interval(points, s, i - 1));
        }
    }
    if let Some(s) = run_start {
        intervals.push(interval(points, s, points.len() - 1));
    }
    intervals
}

fn interval(points: &[Point], s: usize, e: usize) -> DeclineInterval {
    DeclineInterval {
        start_year: points[s].year,
        end_year: points[e].year,
        start_value: points[s].value,
        end_value: points[e].value,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Observed reciprocal above the line: growth slower than the fit.
    AboveLine,
    /// Observed reciprocal below the line: growth faster than the fit.
    BelowLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub onset_year: f64,
    pub direction: Direction,
    /// Length of the consecutive qualifying run starting at the onset.
    pub run_length: usize,
    /// `(year, reciprocal residual relative to the line)` for every scanned
    /// point the line is positive at, in year order.
    pub residuals: Vec<(f64, f64)>,
    /// True when the scan stopped because the extrapolated line crossed
    /// zero before the data ran out.
    pub truncated_at_pole: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DivergenceConfig {
    /// Minimum consecutive qualifying points before an onset is declared.
    pub persistence: usize,
    /// Relative residual magnitude a point must exceed to qualify.
    pub min_rel_residual: f64,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        DivergenceConfig {
            persistence: 5,
            min_rel_residual: 0.02,
        }
    }
}

/// Scans points at or after `scan_from` for sustained departure from the
/// extrapolated reciprocal line. A point qualifies when its reciprocal
/// differs from the line by more than `min_rel_residual` of the line value;
/// the onset is the first point opening a run of at least `persistence`
/// qualifying points on the same side. The scan truncates where the line
/// reaches zero, since the model has no value at or past its pole.
pub fn detect_divergence(
    series: &TimeSeries,
    fit: &HyperbolicFit,
    scan_from: f64,
    config: &DivergenceConfig,
) -> Result<Option<DivergenceReport>> {
    if config.persistence < 2 {
        return Err(Error::Validation(format!(
            "persistence must be at least 2, got {}",
            config.persistence
        )));
    }
    if !config.min_rel_residual.is_finite() || config.min_rel_residual < 0.0 {
        return Err(Error::Validation(format!(
            "minimum relative residual must be non-negative, got {}",
            config.min_rel_residual
        )));
    }
    let scanned: Vec<&Point> = series
        .points()
        .iter()
        .filter(|p| p.year >= scan_from)
        .collect();
    if scanned.is_empty() {
        return Err(Error::Validation(format!(
            "no points at or after scan start {scan_from}"
        )));
    }

    let guard = POLE_GUARD * fit.a.abs();
    let mut residuals: Vec<(f64, f64)> = Vec::with_capacity(scanned.len());
    let mut truncated_at_pole = false;
    for p in &scanned {
        let line = fit.line_at(p.year);
        if !(line > 0.0) || line < guard {
            truncated_at_pole = true;
            break;
        }
        residuals.push((p.year, (1.0 / p.value - line) / line));
    }

    let qualifies = |r: f64| -> i8 {
        if r > config.min_rel_residual {
            1
        } else if r < -config.min_rel_residual {
            -1
        } else {
            0
        }
    };
    let signs: Vec<i8> = residuals.iter().map(|&(_, r)| qualifies(r)).collect();
    for i in 0..signs.len() {
        let s = signs[i];
        if s == 0 {
            continue;
        }
        let run = signs[i..].iter().take_while(|&&x| x == s).count();
        if run >= config.persistence {
            return Ok(Some(DivergenceReport {
                onset_year: residuals[i].0,
                direction: if s > 0 {
                    Direction::AboveLine
                } else {
                    Direction::BelowLine
                },
                run_length: run,
                residuals,
                truncated_at_pole,
            }));
        }
    }
    Ok(None)
}

/// Years between a divergence onset and the fitted pole. Positive when the
/// onset precedes the pole.
pub fn singularity_margin(fit: &HyperbolicFit, divergence: &DivergenceReport) -> Result<f64> {
    Ok(singularity_time(fit)? - divergence.onset_year)
}
