//! Checks of the shipped Latin America dataset beyond the acceptance gate:
//! window contents, fit quality, the whole-span breakpoint search, and the
//! safe-margin arithmetic.

use hypergrowth::hypermodel::{
    eval_model, fit_hyperbolic, goodness, singularity_time, HyperbolicFit,
};
use hypergrowth::ingest::{parse_series, select_range, TimeSeries};
use hypergrowth::regimes::{find_breakpoint, singularity_margin, Direction, DivergenceReport};

const GOLDEN_CSV: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../data/latin_america_gdp.csv"
);

fn golden_series() -> TimeSeries {
    let text = std::fs::read_to_string(GOLDEN_CSV).expect("golden csv readable");
    parse_series(&text, "Latin America", 0.001)
        .expect("golden csv parses")
        .series
}

#[test]
fn fast_window_selects_five_points() {
    let series = golden_series();
    let window = select_range(&series, 1600.0, 1870.0).unwrap();
    let years: Vec<f64> = window.years().collect();
    assert_eq!(years, vec![1600.0, 1700.0, 1820.0, 1850.0, 1870.0]);
}

#[test]
fn fast_fit_explains_reciprocal_variance() {
    let series = golden_series();
    let fit = fit_hyperbolic(&series, (1600.0, 1870.0)).unwrap();
    let g = goodness(&series, &fit, (1600.0, 1870.0)).unwrap();
    let r2 = g.r2_reciprocal.unwrap();
    assert!(r2 >= 0.98, "r2 {r2}");
}

#[test]
fn fitted_poles_lie_beyond_their_windows() {
    let series = golden_series();
    for window in [(1.0, 1500.0), (1600.0, 1870.0)] {
        let fit = fit_hyperbolic(&series, window).unwrap();
        assert!(fit.k > 0.0);
        assert!(fit.line_at(window.0) > 0.0 && fit.line_at(window.1) > 0.0);
        let ts = singularity_time(&fit).unwrap();
        assert!(ts > window.1, "pole {ts} inside window {window:?}");
    }
}

#[test]
fn whole_span_break_search_lands_in_the_decline() {
    let series = golden_series();
    let span = select_range(&series, 1.0, 1870.0).unwrap();
    let candidates: Vec<f64> = span.years().collect();
    let seg = find_breakpoint(&span, &candidates, 2).unwrap();
    assert!(
        (1500.0..=1600.0).contains(&seg.break_year),
        "break at {}",
        seg.break_year
    );
    assert!(!seg.no_improvement);
}

#[test]
fn safe_margin_arithmetic() {
    // a/k exactly 1910, onset 1870.
    let fit = HyperbolicFit {
        a: 955.0,
        k: 0.5,
        window: (1600.0, 1870.0),
        n: 5,
        rss_reciprocal: 0.0,
        r2_reciprocal: None,
    };
    let report = DivergenceReport {
        onset_year: 1870.0,
        direction: Direction::AboveLine,
        run_length: 5,
        residuals: vec![],
        truncated_at_pole: false,
    };
    assert_eq!(singularity_margin(&fit, &report).unwrap(), 40.0);
}

#[test]
fn fast_fit_value_at_1870_tracks_the_datum() {
    let series = golden_series();
    let fit = fit_hyperbolic(&series, (1600.0, 1870.0)).unwrap();
    let modeled = eval_model(&fit, 1870.0).unwrap();
    let observed = series
        .points()
        .iter()
        .find(|p| p.year == 1870.0)
        .unwrap()
        .value;
    let rel = ((modeled - observed) / observed).abs();
    assert!(
        rel <= 0.10,
        "modeled {modeled:.3} vs observed {observed:.3}: {:.1}% apart",
        rel * 100.0
    );
}
