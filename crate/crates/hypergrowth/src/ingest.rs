//! Series container, CSV parsing, and windowing.
//!
//! The on-disk format is two-column CSV with the exact header `year,value`.
//! Values must be positive; the growth models work on reciprocals and
//! logarithms, so zero and negative observations are rejected outright.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub year: f64,
    pub value: f64,
}

/// A validated series: at least two points, strictly increasing years,
/// positive finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    region: String,
    points: Vec<Point>,
}

impl TimeSeries {
    pub fn new(region: impl Into<String>, points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "a series needs at least 2 points, got {}",
                points.len()
            )));
        }
        for p in &points {
            if !p.year.is_finite() {
                return Err(Error::Validation(format!("year {} is not finite", p.year)));
            }
            if !p.value.is_finite() || p.value <= 0.0 {
                return Err(Error::Validation(format!(
                    "value {} at year {} must be positive and finite",
                    p.value, p.year
                )));
            }
        }
        for w in points.windows(2) {
            if w[1].year <= w[0].year {
                return Err(Error::Validation(format!(
                    "years must be strictly increasing; {} does not follow {}",
                    w[1].year, w[0].year
                )));
            }
        }
        Ok(TimeSeries {
            region: region.into(),
            points,
        })
    }

    /// Construction bypass for values already guaranteed by the caller.
    pub(crate) fn from_validated(region: String, points: Vec<Point>) -> Self {
        TimeSeries { region, points }
    }

    pub fn region(&self) -> &str {
        &self.region
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn years(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.year)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.value)
    }

    pub fn summary(&self) -> SeriesSummary {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for p in &self.points {
            min = min.min(p.value);
            max = max.max(p.value);
        }
        SeriesSummary {
            region: self.region.clone(),
            n_points: self.points.len(),
            year_start: self.points[0].year,
            year_end: self.points[self.points.len() - 1].year,
            value_min: min,
            value_max: max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub region: String,
    pub n_points: usize,
    pub year_start: f64,
    pub year_end: f64,
    pub value_min: f64,
    pub value_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSeries {
    pub series: TimeSeries,
    /// Rows dropped because the year or value cell was empty.
    pub rows_skipped: usize,
}

/// Parses two-column CSV text. `unit_scale` multiplies every value on the way
/// in, so a file in millions becomes a series in billions with `0.001`.
///
/// Rows with an empty year or value cell are skipped and counted; anything
/// else that fails to parse is an error naming the 1-based line (the header
/// is line 1). Rows may arrive in any order and are sorted by year.
pub fn parse_series(text: &str, region: &str, unit_scale: f64) -> Result<ParsedSeries> {
    if !unit_scale.is_finite() || unit_scale <= 0.0 {
        return Err(Error::Validation(format!(
            "unit scale must be positive and finite, got {unit_scale}"
        )));
    }
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((i, raw)) => {
                let line = raw.trim();
                if line.is_empty() {
                    continue;
                }
                break (i + 1, line);
            }
            None => {
                return Err(Error::Parse {
                    line: 1,
                    message: "empty input, expected header `year,value`".into(),
                })
            }
        }
    };
    let cols: Vec<&str> = header.1.split(',').map(str::trim).collect();
    if cols != ["year", "value"] {
        return Err(Error::Parse {
            line: header.0,
            message: format!("expected header `year,value`, got `{}`", header.1),
        });
    }

    let mut points = Vec::new();
    let mut rows_skipped = 0usize;
    for (i, raw) in lines {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 2 fields, found {}", cells.len()),
            });
        }
        if cells[0].is_empty() || cells[1].is_empty() {
            rows_skipped += 1;
            continue;
        }
        let year: f64 = cells[0].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("`{}` is not a number", cells[0]),
        })?;
        let value: f64 = cells[1].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("`{}` is not a number", cells[1]),
        })?;
        if !year.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("year `{}` is not finite", cells[0]),
            });
        }
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Validation(format!(
                "line {line_no}: value {value} must be positive and finite"
            )));
        }
        points.push(Point {
            year,
            value: value * unit_scale,
        });
    }
    points.sort_by(|p, q| p.year.total_cmp(&q.year));
    let series = TimeSeries::new(region, points)?;
    Ok(ParsedSeries {
        series,
        rows_skipped,
    })
}

/// Writes a series back out in the same CSV format, with shortest
/// round-trip decimal formatting so `parse_series` recovers it exactly.
pub fn serialize_series(series: &TimeSeries) -> String {
    let mut out = String::from("year,value\n");
    for p in series.points() {
        out.push_str(&format!("{},{}\n", p.year, p.value));
    }
    out
}

/// Restricts a series to the inclusive window `[t0, t1]`.
pub fn select_range(series: &TimeSeries, t0: f64, t1: f64) -> Result<TimeSeries> {
    if !(t0 < t1) {
        return Err(Error::Validation(format!(
            "window start {t0} must precede end {t1}"
        )));
    }
    let points: Vec<Point> = series
        .points()
        .iter()
        .copied()
        .filter(|p| p.year >= t0 && p.year <= t1)
        .collect();
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "window [{t0}, {t1}] holds {} points, need at least 2",
            points.len()
        )));
    }
    TimeSeries::new(series.region(), points)
}
