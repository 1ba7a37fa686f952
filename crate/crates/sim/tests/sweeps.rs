//! Rate sweeps and the scenario file format.

use cpkit_sim::{
    run_rate_sweep, DetectorConfig, GridPoint, Method, Model, ScalarDist, ScenarioSpec, SegmentParams,
    SweepConfig,
};
use proptest::prelude::*;

fn mean_point(len: usize, kappa: f64, sigma: f64) -> GridPoint {
    GridPoint {
        label: format!("kappa={kappa}"),
        spec: ScenarioSpec {
            len,
            change_points: vec![len / 2 + 1],
            params: SegmentParams::Mean { means: vec![0.0, kappa] },
            sigma,
            seed: 0,
        },
    }
}

fn pdp(reps: usize, seed: u64) -> SweepConfig {
    SweepConfig {
        method: Method::Pdp,
        detector: DetectorConfig::default(),
        reps,
        seed,
        timing: false,
    }
}

/// Least-squares slope of `y` on `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[test]
fn localisation_error_scales_like_inverse_square_jump() {
    let kappas = [0.5, 1.0, 2.0, 4.0];
    let grid: Vec<GridPoint> = kappas.iter().map(|&k| mean_point(4000, k, 4.0)).collect();
    let report = run_rate_sweep(Model::Mean, &grid, &pdp(200, 2024)).unwrap();
    let medians: Vec<f64> = report.rows.iter().map(|r| r.median_error).collect();
    assert!(medians.iter().all(|&m| m > 0.0 && m.is_finite()), "medians {medians:?}");
    let b = slope(
        &kappas.map(f64::ln),
        &medians.iter().map(|m| m.ln()).collect::<Vec<_>>(),
    );
    assert!((-3.0..=-1.0).contains(&b), "slope {b}, medians {medians:?}");
}

#[test]
fn sweep_reports_are_reproducible() {
    let grid = vec![mean_point(200, 1.0, 1.0), mean_point(200, 0.3, 1.0)];
    let a = run_rate_sweep(Model::Mean, &grid, &pdp(30, 5)).unwrap();
    let b = run_rate_sweep(Model::Mean, &grid, &pdp(30, 5)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv(), b.to_csv());
    for r in &a.rows {
        assert!((0.0..=1.0).contains(&r.frequency));
        assert!(r.median_error >= 0.0 && r.q90_error >= r.median_error);
    }
}

#[test]
fn noiseless_point_is_always_found() {
    let report = run_rate_sweep(Model::Mean, &[mean_point(100, 5.0, 0.0)], &pdp(1, 0)).unwrap();
    assert_eq!(report.rows[0].frequency, 1.0);
    assert_eq!(report.rows[0].median_error, 0.0);
}

fn dist() -> impl Strategy<Value = ScalarDist> {
    prop_oneof![
        (-5.0f64..5.0, 0.1f64..4.0).prop_map(|(mean, sd)| ScalarDist::Normal { mean, sd }),
        (-5.0f64..0.0, 0.1f64..5.0).prop_map(|(low, w)| ScalarDist::Uniform { low, high: low + w }),
        (-5.0f64..5.0).prop_map(|value| ScalarDist::Point { value }),
    ]
}

fn params() -> impl Strategy<Value = SegmentParams> {
    let seg = 3;
    prop_oneof![
        prop::collection::vec(-10.0f64..10.0, seg).prop_map(|means| SegmentParams::Mean { means }),
        prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), seg)
            .prop_map(|coefficients| SegmentParams::Poly { coefficients }),
        (prop::collection::vec(0.1f64..2.0, 3), prop::collection::vec(0.0f64..3.0, seg)).prop_map(|(direction, thetas)| {
            SegmentParams::Covariance { dim: 3, direction, thetas }
        }),
        prop::collection::vec(prop::collection::vec(0.3f64..0.9, 4), seg)
            .prop_map(|probabilities| SegmentParams::Network { nodes: 12, blocks: 2, probabilities }),
        prop::collection::vec(dist(), seg).prop_map(|distributions| SegmentParams::Ks { distributions }),
        prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), seg)
            .prop_map(|means| SegmentParams::Density { dim: 2, means }),
        (prop::collection::vec(dist(), seg), 0.1f64..3.0)
            .prop_map(|(distributions, gamma)| SegmentParams::Kernel { distributions, gamma }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scenario_file_round_trip(params in params(), sigma in 0.0f64..3.0, seed in any::<u64>()) {
        let spec = ScenarioSpec { len: 90, change_points: vec![31, 61], params, sigma, seed };
        let text = spec.to_config_string();
        let back = ScenarioSpec::from_config_str(&text);
        match spec.truth() {
            Ok(_) => prop_assert_eq!(back.unwrap(), spec),
            // Degenerate random segments are rejected by both paths alike.
            Err(_) => prop_assert!(back.is_err()),
        }
    }
}
