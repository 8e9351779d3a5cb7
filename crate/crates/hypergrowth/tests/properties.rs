//! Invariants that must hold for any admissible input, checked with
//! randomized cases on top of the seeded sweeps in the acceptance suite.

use hypergrowth::hypermodel::{fit_hyperbolic, singularity_time};
use hypergrowth::hypotheses::compare_models;
use hypergrowth::ingest::{parse_series, serialize_series, Point, TimeSeries};
use hypergrowth::regimes::{detect_decline, detect_divergence, DivergenceConfig};
use hypergrowth::report::{simulate_series, SimulateKind, SimulateSpec};
use proptest::prelude::*;

fn hyperbolic_points(a: f64, k: f64, n: usize, step: f64) -> TimeSeries {
    let points = (0..n)
        .map(|i| {
            let year = i as f64 * step;
            Point {
                year,
                value: 1.0 / (a - k * year),
            }
        })
        .collect();
    TimeSeries::new("synthetic", points).unwrap()
}

proptest! {
    #[test]
    fn noiseless_fit_recovers_parameters(
        a in 0.5f64..5.0,
        k_frac in 0.1f64..0.8,
        n in 5usize..40,
        step in 0.5f64..10.0,
    ) {
        let span = (n - 1) as f64 * step;
        let k = k_frac * a / (2.0 * span);
        let series = hyperbolic_points(a, k, n, step);
        let fit = fit_hyperbolic(&series, (0.0, span)).unwrap();
        prop_assert!(((fit.a - a) / a).abs() <= 1e-10);
        prop_assert!(((fit.k - k) / k).abs() <= 1e-10);
    }

    #[test]
    fn time_shift_translates_the_intercept(
        a in 1.0f64..4.0,
        k_frac in 0.1f64..0.8,
        shift in -500.0f64..500.0,
    ) {
        let n = 12;
        let span = 11.0 * 2.0;
        let k = k_frac * a / (2.0 * span);
        let base = hyperbolic_points(a, k, n, 2.0);
        let fit0 = fit_hyperbolic(&base, (0.0, span)).unwrap();

        let shifted_points: Vec<Point> = base
            .points()
            .iter()
            .map(|p| Point { year: p.year + shift, value: p.value })
            .collect();
        let shifted = TimeSeries::new("shifted", shifted_points).unwrap();
        let fit1 = fit_hyperbolic(&shifted, (shift, span + shift)).unwrap();

        prop_assert!((fit1.k - fit0.k).abs() <= 1e-9 * fit0.k.abs());
        let expected_a = fit0.a + fit0.k * shift;
        prop_assert!((fit1.a - expected_a).abs() <= 1e-9 * expected_a.abs().max(1.0));
        // Same singularity year after un-shifting.
        let ts0 = singularity_time(&fit0).unwrap();
        let ts1 = singularity_time(&fit1).unwrap();
        prop_assert!((ts1 - (ts0 + shift)).abs() <= 1e-6 * ts0.abs().max(1.0));
    }

    #[test]
    fn value_scaling_rescales_parameters(
        a in 1.0f64..4.0,
        k_frac in 0.1f64..0.8,
        scale in prop::sample::select(vec![1e-3, 0.037, 12.0, 1e4]),
    ) {
        let n = 10;
        let span = 9.0 * 3.0;
        let k = k_frac * a / (2.0 * span);
        let base = hyperbolic_points(a, k, n, 3.0);
        let fit0 = fit_hyperbolic(&base, (0.0, span)).unwrap();

        let scaled_points: Vec<Point> = base
            .points()
            .iter()
            .map(|p| Point { year: p.year, value: p.value * scale })
            .collect();
        let scaled = TimeSeries::new("scaled", scaled_points).unwrap();
        let fit1 = fit_hyperbolic(&scaled, (0.0, span)).unwrap();

        prop_assert!((fit1.a * scale - fit0.a).abs() <= 1e-9 * fit0.a.abs());
        prop_assert!((fit1.k * scale - fit0.k).abs() <= 1e-9 * fit0.k.abs());
        let ts0 = singularity_time(&fit0).unwrap();
        let ts1 = singularity_time(&fit1).unwrap();
        prop_assert!((ts1 - ts0).abs() <= 1e-6 * ts0.abs());
    }

    #[test]
    fn fitting_is_bit_deterministic(seed in 0u64..10_000) {
        let spec = SimulateSpec {
            kind: SimulateKind::Hyperbolic { a: 2.0, k: 0.008 },
            start: 0.0,
            end: 90.0,
            step: 3.0,
            noise_rel: 0.04,
            seed,
        };
        let s1 = simulate_series(&spec).unwrap();
        let s2 = simulate_series(&spec).unwrap();
        let f1 = fit_hyperbolic(&s1, (0.0, 90.0)).unwrap();
        let f2 = fit_hyperbolic(&s2, (0.0, 90.0)).unwrap();
        prop_assert_eq!(f1.a.to_bits(), f2.a.to_bits());
        prop_assert_eq!(f1.k.to_bits(), f2.k.to_bits());
        prop_assert_eq!(f1.rss_reciprocal.to_bits(), f2.rss_reciprocal.to_bits());
    }

    #[test]
    fn serialize_parse_is_identity(
        years in prop::collection::vec(0.0f64..3000.0, 2..30),
        values in prop::collection::vec(0.01f64..1e6, 30),
    ) {
        let mut ys = years;
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        prop_assume!(ys.len() >= 2);
        let points: Vec<Point> = ys
            .iter()
            .zip(values.iter())
            .map(|(&year, &value)| Point { year, value })
            .collect();
        let series = TimeSeries::new("round", points).unwrap();
        let text = serialize_series(&series);
        let reparsed = parse_series(&text, "round", 1.0).unwrap();
        prop_assert_eq!(reparsed.rows_skipped, 0);
        prop_assert_eq!(reparsed.series.points(), series.points());
    }

    #[test]
    fn decline_intervals_are_disjoint_and_exact(
        values in prop::collection::vec(0.5f64..2.0, 3..40),
    ) {
        let points: Vec<Point> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Point { year: i as f64, value: v })
            .collect();
        let series = TimeSeries::new("walk", points).unwrap();
        let declines = detect_decline(&series);

        for w in declines.windows(2) {
            prop_assert!(w[0].end_year < w[1].start_year);
        }
        // Every adjacent strictly-decreasing pair falls inside some interval,
        // and intervals contain nothing else.
        for w in series.points().windows(2) {
            let decreasing = w[1].value < w[0].value;
            let covered = declines
                .iter()
                .any(|d| d.start_year <= w[0].year && w[1].year <= d.end_year);
            prop_assert_eq!(decreasing, covered);
        }
    }

    #[test]
    fn persistence_only_delays_onset(
        seed in 0u64..2_000,
        base_persistence in 2usize..6,
    ) {
        let spec = SimulateSpec {
            kind: SimulateKind::Hyperbolic { a: 1.5, k: 0.006 },
            start: 0.0,
            end: 120.0,
            step: 2.0,
            noise_rel: 0.08,
            seed,
        };
        let series = simulate_series(&spec).unwrap();
        let fit = fit_hyperbolic(&series, (0.0, 60.0)).unwrap();
        let at = |persistence: usize| {
            let config = DivergenceConfig { persistence, min_rel_residual: 0.02 };
            detect_divergence(&series, &fit, 60.0, &config).unwrap()
        };
        let strict = at(base_persistence + 1);
        let loose = at(base_persistence);
        if let Some(s) = &strict {
            let l = loose.as_ref().expect("loosening persistence kept the onset");
            prop_assert!(l.onset_year <= s.onset_year);
        }
    }

    #[test]
    fn model_ranking_survives_value_scaling(seed in 0u64..5_000) {
        let spec = SimulateSpec {
            kind: SimulateKind::Hyperbolic { a: 2.5, k: 0.009 },
            start: 0.0,
            end: 80.0,
            step: 8.0,
            noise_rel: 0.03,
            seed,
        };
        let series = simulate_series(&spec).unwrap();
        let base = compare_models(&series, (0.0, 80.0)).unwrap();
        let scaled_points: Vec<Point> = series
            .points()
            .iter()
            .map(|p| Point { year: p.year, value: p.value * 250.0 })
            .collect();
        let scaled = TimeSeries::new("scaled", scaled_points).unwrap();
        let cmp = compare_models(&scaled, (0.0, 80.0)).unwrap();
        prop_assert_eq!(cmp.best, base.best);
    }
}
