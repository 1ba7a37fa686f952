//! Seeded Monte Carlo checks of detection frequency and localisation error
//! with the default tuning of each detector.

use cpkit_core::engine::{hausdorff, sample_intervals, solve_min_partition};
use cpkit_core::mean::MeanSeries;
use cpkit_core::nonparametric::{
    default_tau_ks, default_tau_kde, detect_kde_wbs, detect_ks_wbs, KdeScore, KernelFamily,
    KernelSpec,
};
use cpkit_core::poly::{default_lambda, refine_poly, PolyCost};
use cpkit_core::rkhs::{median_heuristic_gamma, refine_kernel, Kernel};
use cpkit_core::series::{AdjacencySeries, VectorSeries};
use cpkit_core::{covariance, network, ChangePointSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

/// Whether `found` is exactly one point within `tol` of `eta`.
fn single_hit(found: &ChangePointSet, eta: usize, tol: usize) -> bool {
    found.len() == 1 && found.as_slice()[0].abs_diff(eta) <= tol
}

fn frequency(reps: u64, hit: impl Fn(u64) -> bool + Sync) -> f64 {
    use rayon::prelude::*;
    (0..reps).into_par_iter().filter(|&s| hit(s)).count() as f64 / reps as f64
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

fn sd_change(len: usize, eta: usize, sd_after: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (1..=len)
        .map(|t| gauss(&mut r) * if t < eta { 1.0 } else { sd_after })
        .collect()
}

#[test]
fn ks_detects_scale_change_and_stays_quiet_on_nulls() {
    let (len, eta) = (800, 401);
    let hit = frequency(100, |seed| {
        let x = MeanSeries::new(sd_change(len, eta, 3.0, seed)).unwrap();
        let ivs = sample_intervals(len, 100, None, seed + 1000).unwrap();
        single_hit(&detect_ks_wbs(&x, &ivs, default_tau_ks(len)).unwrap(), eta, 60)
    });
    assert!(hit >= 0.9, "detection frequency {hit}");
    for tau in [default_tau_ks(len), 2.0 * (len as f64).ln().sqrt()] {
        let quiet = frequency(100, |seed| {
            let x = MeanSeries::new(sd_change(len, eta, 1.0, seed + 500)).unwrap();
            let ivs = sample_intervals(len, 100, None, seed).unwrap();
            detect_ks_wbs(&x, &ivs, tau).unwrap().is_empty()
        });
        assert!(quiet >= 0.95, "null quiet frequency {quiet} at tau {tau}");
    }
}

fn shifted_plane(len: usize, eta: usize, shift: f64, seed: u64) -> VectorSeries {
    let mut r = rng(seed);
    let mut data = Vec::with_capacity(2 * len);
    for t in 1..=len {
        data.push(gauss(&mut r) + if t < eta { 0.0 } else { shift });
        data.push(gauss(&mut r));
    }
    VectorSeries::from_flat(data, 2).unwrap()
}

fn kde_run(x: &VectorSeries, seed: u64) -> ChangePointSet {
    let k = KernelSpec::new(KernelFamily::Gaussian, 0.5, 2).unwrap();
    let score = KdeScore::new(x, &k).unwrap();
    let ivs = sample_intervals(x.len(), 100, None, seed).unwrap();
    detect_kde_wbs(x, &ivs, default_tau_kde(&score, &k), &k).unwrap()
}

#[test]
fn kde_detects_planar_mean_shift_and_stays_quiet_on_nulls() {
    // A unit shift at h = 0.5 leaves the population gap at the true split
    // below the null maximum of the scan, so the check uses a shift of 2.
    let (len, eta) = (600, 301);
    let hit = frequency(100, |seed| single_hit(&kde_run(&shifted_plane(len, eta, 2.0, seed), seed), eta, 60));
    assert!(hit >= 0.85, "detection frequency {hit}");
    let quiet = frequency(100, |seed| kde_run(&shifted_plane(len, eta, 0.0, seed + 700), seed).is_empty());
    assert!(quiet >= 0.95, "null quiet frequency {quiet}");
}

/// Two equal blocks; within-block probability `p` and between-block `q`
/// before `eta`, swapped from `eta` on.
fn block_flip(n: usize, len: usize, eta: usize, p: f64, q: f64, seed: u64) -> AdjacencySeries {
    let mut r = rng(seed);
    let snaps = (1..=len)
        .map(|t| {
            let mut up = Vec::with_capacity(AdjacencySeries::pair_count(n));
            for i in 0..n {
                for j in i + 1..n {
                    let same = (i < n / 2) == (j < n / 2);
                    let prob = if same == (t < eta) { p } else { q };
                    up.push(u8::from(r.random::<f64>() < prob));
                }
            }
            up
        })
        .collect();
    AdjacencySeries::from_upper(n, snaps).unwrap()
}

fn nbs_full_scale(a: &AdjacencySeries, seed: u64) -> ChangePointSet {
    let (x, w) = a.split_even_odd().unwrap();
    let ivs = sample_intervals(x.len(), 100, None, seed).unwrap();
    network::nbs_detect(&x, &w, &ivs, network::default_tau1(&x, &w))
        .unwrap()
        .to_full_scale()
}

#[test]
fn nbs_detects_block_flip_and_stays_quiet_on_nulls() {
    let (n, len, eta) = (50, 400, 151);
    let hit = frequency(100, |seed| single_hit(&nbs_full_scale(&block_flip(n, len, eta, 0.3, 0.1, seed), seed), eta, 20));
    assert!(hit >= 0.9, "detection frequency {hit}");
    let quiet = frequency(100, |seed| nbs_full_scale(&block_flip(n, len, eta, 0.2, 0.2, seed + 300), seed).is_empty());
    assert!(quiet >= 0.95, "null quiet frequency {quiet}");
}

#[test]
fn covariance_null_stays_quiet() {
    let (p, len) = (10, 1200);
    let quiet = frequency(100, |seed| {
        let mut r = rng(seed + 900);
        let data: Vec<f64> = (0..p * len).map(|_| gauss(&mut r)).collect();
        let full = VectorSeries::from_flat(data, p).unwrap();
        let (x, w) = covariance::split_even_odd(&full).unwrap();
        let ivs = sample_intervals(x.len(), 100, None, seed).unwrap();
        covariance::detect_cov_wbsip(&x, &w, &ivs, covariance::default_tau(&x))
            .unwrap()
            .is_empty()
    });
    assert!(quiet >= 0.95, "null quiet frequency {quiet}");
}

#[test]
fn kernel_refinement_does_not_worsen_a_displaced_estimate() {
    let (len, eta) = (400, 201);
    let delta = 200;
    let improved = frequency(100, |seed| {
        let x = VectorSeries::from_scalars(&sd_change(len, eta, 3.0, seed + 50)).unwrap();
        let gamma = median_heuristic_gamma(&x, seed);
        let start = if seed % 2 == 0 { eta + delta / 10 } else { eta - delta / 10 };
        let initial = ChangePointSet::new(vec![start], len).unwrap();
        let refined = refine_kernel(&x, Kernel::Rbf { gamma }, &initial).unwrap();
        refined.points.as_slice()[0].abs_diff(eta) <= start.abs_diff(eta)
    });
    assert!(improved >= 0.8, "refinement kept or improved {improved}");
}

#[test]
fn poly_refinement_median_error_not_worse() {
    // Signal 0 before the change and t/T from it on.
    let (len, eta) = (400, 201);
    let truth = ChangePointSet::new(vec![eta], len).unwrap();
    let errors: Vec<(f64, f64)> = {
        use rayon::prelude::*;
        (0..200u64)
            .into_par_iter()
            .map(|seed| {
                let mut r = rng(seed + 4000);
                let x: Vec<f64> = (1..=len)
                    .map(|t| {
                        let f = if t < eta { 0.0 } else { t as f64 / len as f64 };
                        f + 0.25 * gauss(&mut r)
                    })
                    .collect();
                let s = MeanSeries::new(x).unwrap();
                let initial = solve_min_partition(len, &PolyCost::new(&s, 1), default_lambda(&s, 1))
                    .unwrap()
                    .change_points;
                if initial.is_empty() {
                    return (f64::INFINITY, f64::INFINITY);
                }
                let refined = refine_poly(&s, 1, &initial).unwrap();
                (hausdorff(&initial, &truth), hausdorff(&refined.points, &truth))
            })
            .collect()
    };
    let before = median(errors.iter().map(|e| e.0).collect());
    let after = median(errors.iter().map(|e| e.1).collect());
    assert!(after <= before, "median error {before} before refinement, {after} after");
}
