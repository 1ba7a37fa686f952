//! Monte Carlo rate sweeps.

use std::fmt::Write as _;
use std::time::Instant;

use cpkit_core::engine::hausdorff;
use rayon::prelude::*;

use crate::detect::{detect, DetectorConfig, Method};
use crate::error::{Error, Result};
use crate::generate::generate;
use crate::scenario::{Model, ScenarioSpec};

/// One point of a parameter grid. The scenario's own seed is ignored; each
/// replicate draws with a derived sub-seed.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub label: String,
    pub spec: ScenarioSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub method: Method,
    pub detector: DetectorConfig,
    pub reps: usize,
    pub seed: u64,
    /// Record mean detector runtime. Off by default so that reports are
    /// reproducible byte for byte.
    pub timing: bool,
}

/// Summary of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub point: usize,
    pub label: String,
    pub replicates: usize,
    /// Fraction of replicates with as many estimates as true change points.
    pub frequency: f64,
    pub median_error: f64,
    pub q90_error: f64,
    /// Replicates whose detector returned an error; they count as misses with
    /// infinite error.
    pub failures: usize,
    pub mean_runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
}

impl RateReport {
    pub const HEADER: &'static str =
        "point,label,replicates,frequency,median_error,q90_error,failures,mean_runtime_ms";

    /// CSV with [`Self::HEADER`] as first row. Infinite errors print as `inf`
    /// and a missing runtime as an empty field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            let runtime = r.mean_runtime_ms.map(|v| format!("{v:.3}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.point,
                csv_field(&r.label),
                r.replicates,
                r.frequency,
                r.median_error,
                r.q90_error,
                r.failures,
                runtime
            );
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Data seed of replicate `rep` at grid point `point`.
pub fn sub_seed(seed: u64, point: usize, rep: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ point as u64) ^ rep as u64)
}

/// Empirical quantile `x_(ceil(q n))` of sorted values, which stays defined
/// when some values are infinite.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let k = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

struct Outcome {
    hit: bool,
    error: f64,
    failed: bool,
    millis: f64,
}

/// Runs `cfg.reps` replicates at every grid point. Replicates run in
/// parallel; each draws its data from [`sub_seed`] and its intervals from a
/// further mix of that seed, so the report does not depend on scheduling.
pub fn run_rate_sweep(model: Model, grid: &[GridPoint], cfg: &SweepConfig) -> Result<RateReport> {
    if cfg.reps == 0 {
        return Err(Error::invalid("reps must be at least 1"));
    }
    for (i, g) in grid.iter().enumerate() {
        if g.spec.model() != model {
            return Err(Error::invalid(format!(
                "grid point {i} is a {} scenario, expected {model}",
                g.spec.model()
            )));
        }
        g.spec.truth()?;
    }
    let rows = grid
        .iter()
        .enumerate()
        .map(|(point, g)| {
            let outcomes: Vec<Outcome> = (0..cfg.reps)
                .into_par_iter()
                .map(|rep| {
                    let data_seed = sub_seed(cfg.seed, point, rep);
                    let data = generate(&g.spec.with_seed(data_seed)).expect("validated scenario");
                    let start = Instant::now();
                    let result = detect(
                        model,
                        cfg.method,
                        &data.observations,
                        &cfg.detector,
                        splitmix64(data_seed),
                    );
                    let millis = start.elapsed().as_secs_f64() * 1e3;
                    match result {
                        Ok(d) => Outcome {
                            hit: d.change_points.len() == data.truth.change_points.len(),
                            error: hausdorff(&d.change_points, &data.truth.change_points),
                            failed: false,
                            millis,
                        },
                        Err(_) => Outcome {
                            hit: false,
                            error: f64::INFINITY,
                            failed: true,
                            millis,
                        },
                    }
                })
                .collect();
            let mut errors: Vec<f64> = outcomes.iter().map(|o| o.error).collect();
            errors.sort_by(f64::total_cmp);
            let n = outcomes.len() as f64;
            RateRow {
                point,
                label: g.label.clone(),
                replicates: cfg.reps,
                frequency: outcomes.iter().filter(|o| o.hit).count() as f64 / n,
                median_error: quantile(&errors, 0.5),
                q90_error: quantile(&errors, 0.9),
                failures: outcomes.iter().filter(|o| o.failed).count(),
                mean_runtime_ms: cfg
                    .timing
                    .then(|| outcomes.iter().map(|o| o.millis).sum::<f64>() / n),
            }
        })
        .collect();
    Ok(RateReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::SegmentParams;

    fn point(label: &str, sigma: f64, jump: f64) -> GridPoint {
        GridPoint {
            label: label.into(),
            spec: ScenarioSpec {
                len: 120,
                change_points: vec![61],
                params: SegmentParams::Mean {
                    means: vec![0.0, jump],
                },
                sigma,
                seed: 0,
            },
        }
    }

    fn cfg(reps: usize) -> SweepConfig {
        SweepConfig {
            method: Method::Pdp,
            detector: DetectorConfig::default(),
            reps,
            seed: 42,
            timing: false,
        }
    }

    #[test]
    fn noiseless_single_rep() {
        let r = run_rate_sweep(Model::Mean, &[point("clean", 0.0, 2.0)], &cfg(1)).unwrap();
        assert_eq!(r.rows[0].frequency, 1.0);
        assert_eq!(r.rows[0].median_error, 0.0);
        assert_eq!(r.rows[0].mean_runtime_ms, None);
    }

    #[test]
    fn sweep_is_deterministic() {
        let grid = [point("a", 1.0, 1.0), point("b", 1.0, 3.0)];
        let a = run_rate_sweep(Model::Mean, &grid, &cfg(20)).unwrap();
        let b = run_rate_sweep(Model::Mean, &grid, &cfg(20)).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        for r in &a.rows {
            assert!((0.0..=1.0).contains(&r.frequency));
            assert!(r.median_error >= 0.0 && r.q90_error >= r.median_error);
        }
    }

    #[test]
    fn zero_reps_rejected() {
        assert!(run_rate_sweep(Model::Mean, &[point("a", 1.0, 1.0)], &cfg(0)).is_err());
    }

    #[test]
    fn model_mismatch_rejected() {
        assert!(run_rate_sweep(Model::Poly, &[point("a", 1.0, 1.0)], &cfg(1)).is_err());
    }

    #[test]
    fn csv_header_and_quoting() {
        let r = RateReport {
            rows: vec![RateRow {
                point: 0,
                label: "k=1, d=2".into(),
                replicates: 3,
                frequency: 0.5,
                median_error: f64::INFINITY,
                q90_error: f64::INFINITY,
                failures: 0,
                mean_runtime_ms: None,
            }],
        };
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(RateReport::HEADER));
        assert_eq!(lines.next(), Some("0,\"k=1, d=2\",3,0.5,inf,inf,0,"));
    }

    #[test]
    fn quantile_nearest_rank() {
        let v = [1.0, 2.0, 3.0, 4.0, f64::INFINITY];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.9), f64::INFINITY);
        assert_eq!(quantile(&v, 0.0), 1.0);
    }

    #[test]
    fn sub_seeds_distinct() {
        let mut seen = std::collections::HashSet::new();
        for p in 0..10 {
            for r in 0..100 {
                assert!(seen.insert(sub_seed(1, p, r)));
            }
        }
    }
}
