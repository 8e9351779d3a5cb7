//! The growth model and its estimator.
//!
//! The model says the reciprocal of the series falls on a straight line,
//! `1/S(t) = a - k*t`, so `S(t) = 1/(a - k*t)` blows up at the finite time
//! `t_s = a/k` when `k > 0`. Fitting is ordinary least squares on the
//! reciprocals, which keeps the estimator linear and exactly reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{select_range, Point, TimeSeries};

/// Relative width of the band around the pole where evaluation is refused.
pub const POLE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicFit {
    pub a: f64,
    pub k: f64,
    pub window: (f64, f64),
    pub n: usize,
    pub rss_reciprocal: f64,
    /// `None` when the reciprocals have zero variance, where the ratio is
    /// undefined.
    pub r2_reciprocal: Option<f64>,
}

impl HyperbolicFit {
    /// The fitted reciprocal-space line `a - k*t`, defined everywhere.
    pub fn line_at(&self, t: f64) -> f64 {
        self.a - self.k * t
    }
}

/// Goodness-of-fit in reciprocal space over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct Goodness {
    pub rss_reciprocal: f64,
    pub r2_reciprocal: Option<f64>,
    /// `(year, observed_reciprocal - fitted_line)` ordered by year.
    pub residuals: Vec<(f64, f64)>,
}

/// Pointwise reciprocal of a series. Applying it twice recovers the
/// original up to floating-point rounding.
pub fn reciprocal(series: &TimeSeries) -> TimeSeries {
    let points = series
        .points()
        .iter()
        .map(|p| Point {
            year: p.year,
            value: 1.0 / p.value,
        })
        .collect();
    TimeSeries::from_validated(series.region().to_string(), points)
}

/// Least-squares line through `(xs, ys)`, returned as `(intercept, slope)`.
/// Uses centered normal equations so large year offsets stay well
/// conditioned.
pub(crate) fn ols_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return Err(Error::SingularDesign(format!(
            "need at least 2 paired observations, got {n} xs and {} ys",
            ys.len()
        )));
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let mut s_xx = 0.0;
    let mut s_xy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        s_xx += dx * dx;
        s_xy += dx * (y - mean_y);
    }
    if s_xx <= 0.0 || !s_xx.is_finite() {
        return Err(Error::SingularDesign(
            "design has no spread along the time axis".into(),
        ));
    }
    let slope = s_xy / s_xx;
    let intercept = mean_y - slope * mean_x;
    if !slope.is_finite() || !intercept.is_finite() {
        return Err(Error::SingularDesign(
            "normal equations produced non-finite coefficients".into(),
        ));
    }
    Ok((intercept, slope))
}

/// Fits the reciprocal-space line to an explicit point slice, recording
/// `window` as the fit's provenance.
pub(crate) fn fit_point_slice(points: &[Point], window: (f64, f64)) -> Result<HyperbolicFit> {
    let xs: Vec<f64> = points.iter().map(|p| p.year).collect();
    let ys: Vec<f64> = points.iter().map(|p| 1.0 / p.value).collect();
    let (intercept, slope) = ols_line(&xs, &ys)?;
    let a = intercept;
    let k = -slope;
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut rss = 0.0;
    let mut sst = 0.0;
    for (&x, &y) in xs.iter().zip(&ys) {
        let r = y - (a - k * x);
        rss += r * r;
        let d = y - mean;
        sst += d * d;
    }
    Ok(HyperbolicFit {
        a,
        k,
        window,
        n: points.len(),
        rss_reciprocal: rss,
        r2_reciprocal: if sst > 0.0 { Some(1.0 - rss / sst) } else { None },
    })
}

/// Fits the reciprocal-space line to the points of `series` inside the
/// inclusive window. The fit itself does not require growth; a
/// non-positive `k` only becomes an error when a singularity time is asked
/// for.
pub fn fit_hyperbolic(series: &TimeSeries, window: (f64, f64)) -> Result<HyperbolicFit> {
    let selected = select_range(series, window.0, window.1)?;
    fit_point_slice(selected.points(), window)
}

/// The time `t_s = a/k` where the fitted curve blows up.
pub fn singularity_time(fit: &HyperbolicFit) -> Result<f64> {
    if fit.k <= 0.0 || !fit.k.is_finite() {
        return Err(Error::NoSingularity { k: fit.k });
    }
    Ok(fit.a / fit.k)
}

/// Evaluates the fitted curve `1/(a - k*t)`. Refuses times at or past the
/// pole, and inside a guard band `|a - k*t| < POLE_GUARD * |a|` around it
/// where the value is dominated by rounding.
pub fn eval_model(fit: &HyperbolicFit, t: f64) -> Result<f64> {
    let denom = fit.line_at(t);
    if !(denom > 0.0) || denom < POLE_GUARD * fit.a.abs() {
        return Err(Error::PoleEvaluation { t });
    }
    Ok(1.0 / denom)
}

/// Reciprocal-space goodness of `fit` against the data inside `window`.
pub fn goodness(series: &TimeSeries, fit: &HyperbolicFit, window: (f64, f64)) -> Result<Goodness> {
    let selected = select_range(series, window.0, window.1)?;
    let mut residuals = Vec::with_capacity(selected.len());
    let mut rss = 0.0;
    let mut mean = 0.0;
    for p in selected.points() {
        mean += 1.0 / p.value;
    }
    mean /= selected.len() as f64;
    let mut sst = 0.0;
    for p in selected.points() {
        let y = 1.0 / p.value;
        let r = y - fit.line_at(p.year);
        residuals.push((p.year, r));
        rss += r * r;
        let d = y - mean;
        sst += d * d;
    }
    let r2 = if sst > 0.0 { Some(1.0 - rss / sst) } else { None };
    Ok(Goodness {
        rss_reciprocal: rss,
        r2_reciprocal: r2,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn series(pairs: &[(f64, f64)]) -> TimeSeries {
        let points = pairs.iter().map(|&(year, value)| Point { year, value }).collect();
        TimeSeries::new("test", points).unwrap()
    }

    #[test]
    fn two_points_interpolate_exactly() {
        let s = series(&[(0.0, 0.5), (1.0, 1.0)]);
        let fit = fit_hyperbolic(&s, (0.0, 1.0)).unwrap();
        assert_relative_eq!(fit.a, 2.0, max_relative = 1e-14);
        assert_relative_eq!(fit.k, 1.0, max_relative = 1e-14);
        assert!(fit.rss_reciprocal < 1e-28);
        assert_eq!(singularity_time(&fit).unwrap(), 2.0);
    }

    #[test]
    fn recovers_parameters_from_exact_data() {
        let a = 1.57;
        let k = 8.224e-4;
        let pairs: Vec<(f64, f64)> = (1600..=1870)
            .step_by(10)
            .map(|y| {
                let t = y as f64;
                (t, 1.0 / (a - k * t))
            })
            .collect();
        let s = series(&pairs);
        let fit = fit_hyperbolic(&s, (1600.0, 1870.0)).unwrap();
        assert_relative_eq!(fit.a, a, max_relative = 1e-10);
        assert_relative_eq!(fit.k, k, max_relative = 1e-10);
        assert_relative_eq!(singularity_time(&fit).unwrap(), a / k, max_relative = 1e-8);
        assert_eq!(fit.n, pairs.len());
    }

    #[test]
    fn window_restricts_the_fit() {
        let s = series(&[(0.0, 1.0), (1.0, 2.0), (2.0, 100.0), (3.0, 1000.0)]);
        let fit = fit_hyperbolic(&s, (0.0, 1.0)).unwrap();
        assert_eq!(fit.n, 2);
        assert_relative_eq!(fit.a, 1.0, max_relative = 1e-14);
        assert_relative_eq!(fit.k, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn thin_window_is_insufficient_data() {
        let s = series(&[(0.0, 1.0), (10.0, 2.0)]);
        assert!(matches!(
            fit_hyperbolic(&s, (3.0, 4.0)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn flat_data_has_no_singularity() {
        let s = series(&[(0.0, 2.0), (1.0, 2.0), (2.0, 2.0)]);
        let fit = fit_hyperbolic(&s, (0.0, 2.0)).unwrap();
        assert_eq!(fit.k, 0.0);
        assert!(matches!(
            singularity_time(&fit),
            Err(Error::NoSingularity { .. })
        ));
        assert!(fit.r2_reciprocal.is_none());
    }

    #[test]
    fn declining_data_has_no_singularity() {
        let s = series(&[(0.0, 4.0), (1.0, 2.0), (2.0, 1.0)]);
        let fit = fit_hyperbolic(&s, (0.0, 2.0)).unwrap();
        assert!(fit.k < 0.0);
        assert!(matches!(
            singularity_time(&fit),
            Err(Error::NoSingularity { .. })
        ));
    }

    #[test]
    fn eval_refuses_pole_and_beyond() {
        let fit = HyperbolicFit {
            a: 2.0,
            k: 1.0,
            window: (0.0, 1.0),
            n: 2,
            rss_reciprocal: 0.0,
            r2_reciprocal: None,
        };
        assert_relative_eq!(eval_model(&fit, 0.0).unwrap(), 0.5);
        assert_relative_eq!(eval_model(&fit, 1.5).unwrap(), 2.0);
        assert!(matches!(
            eval_model(&fit, 2.0),
            Err(Error::PoleEvaluation { .. })
        ));
        assert!(matches!(
            eval_model(&fit, 3.0),
            Err(Error::PoleEvaluation { .. })
        ));
    }

    #[test]
    fn eval_guard_band_is_relative() {
        let fit = HyperbolicFit {
            a: 2.0,
            k: 1.0,
            window: (0.0, 1.0),
            n: 2,
            rss_reciprocal: 0.0,
            r2_reciprocal: None,
        };
        assert!(eval_model(&fit, 2.0 - 1e-6).is_ok());
        assert!(eval_model(&fit, 2.0 - 1e-14).is_err());
    }

    #[test]
    fn ols_rejects_zero_spread() {
        let err = ols_line(&[5.0, 5.0, 5.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::SingularDesign(_)));
    }

    #[test]
    fn goodness_matches_manual_computation() {
        let s = series(&[(0.0, 1.0), (1.0, 0.5), (2.0, 1.0)]);
        let fit = HyperbolicFit {
            a: 1.0,
            k: 0.0,
            window: (0.0, 2.0),
            n: 3,
            rss_reciprocal: 0.0,
            r2_reciprocal: None,
        };
        let g = goodness(&s, &fit, (0.0, 2.0)).unwrap();
        assert_eq!(g.residuals.len(), 3);
        assert_eq!(g.residuals[0], (0.0, 0.0));
        assert_eq!(g.residuals[1], (1.0, 1.0));
        assert_eq!(g.residuals[2], (2.0, 0.0));
        assert_relative_eq!(g.rss_reciprocal, 1.0);
    }

    #[test]
    fn reciprocal_twice_is_identity() {
        let s = series(&[(0.0, 0.25), (1.0, 2.0), (2.0, 8.0)]);
        assert_eq!(reciprocal(&reciprocal(&s)), s);
        let t = series(&[(0.0, 3.7), (1.0, 11.3)]);
        let back = reciprocal(&reciprocal(&t));
        for (p, q) in back.points().iter().zip(t.points()) {
            assert_relative_eq!(p.value, q.value, max_relative = 1e-15);
        }
    }
}
