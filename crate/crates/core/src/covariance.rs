//! Covariance change points through independent projection.
//!
//! Directions are estimated on one sample half from CUSUMs of outer
//! products. Every random interval then scans the univariate CUSUM of the
//! squared projections of the other half onto its own direction.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::engine::{wbs_scan, MarginTrim, RandomIntervalSet, ScanScore, TrimRule};
use crate::error::{Error, Result};
use crate::linalg::leading_eigenpair;
use crate::mean::MeanSeries;
use crate::series::VectorSeries;
use crate::types::ChangePointSet;
use crate::{check_triple, cusum_weights};

/// One direction per random interval; the zero vector marks intervals too
/// short to estimate a direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    directions: Vec<DVector<f64>>,
}

impl ProjectionSet {
    pub fn directions(&self) -> &[DVector<f64>] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

/// Prefix sums of the outer products `x_t x_t'`.
struct OuterPrefix {
    dim: usize,
    data: Vec<f64>,
}

impl OuterPrefix {
    fn new(x: &VectorSeries) -> Self {
        let p = x.dim();
        let mut data = vec![0.0; (x.len() + 1) * p * p];
        for (t, row) in x.rows().enumerate() {
            let (prev, next) = data.split_at_mut((t + 1) * p * p);
            let prev = &prev[t * p * p..];
            let next = &mut next[..p * p];
            for i in 0..p {
                for j in 0..p {
                    next[i * p + j] = prev[i * p + j] + row[i] * row[j];
                }
            }
        }
        Self { dim: p, data }
    }

    fn block(&self, t: usize) -> &[f64] {
        let q = self.dim * self.dim;
        &self.data[t * q..(t + 1) * q]
    }

    fn cusum(&self, s: usize, t: usize, e: usize) -> DMatrix<f64> {
        let (wl, wr) = cusum_weights(s, t, e);
        let (bs, bt, be) = (self.block(s), self.block(t), self.block(e));
        DMatrix::from_fn(self.dim, self.dim, |i, j| {
            let k = i * self.dim + j;
            wl * (bt[k] - bs[k]) - wr * (be[k] - bt[k])
        })
    }
}

/// Matrix CUSUM of the outer products `x_t x_t'` at split `(s, t, e)`.
pub fn outer_product_cusum(x: &VectorSeries, s: usize, t: usize, e: usize) -> Result<DMatrix<f64>> {
    check_triple(s, t, e, x.len())?;
    Ok(OuterPrefix::new(x).cusum(s, t, e))
}

/// Default direction buffer `p * log T`.
pub fn default_pc_buffer(w: &VectorSeries) -> f64 {
    w.dim() as f64 * (w.len() as f64).ln()
}

/// Leading eigenvector of the outer-product CUSUM at the split maximising
/// its operator norm, for every random interval.
///
/// Interval `[a, b]` is scanned as the window `(a - 1, b)` over splits at
/// least `buffer` from either end; windows with fewer than `2 * buffer + 1`
/// observations get the zero vector.
pub fn pc_directions(
    w: &VectorSeries,
    intervals: &RandomIntervalSet,
    buffer: f64,
) -> Result<ProjectionSet> {
    if !(buffer >= 0.0) {
        return Err(Error::invalid(format!("buffer must be nonnegative, got {buffer}")));
    }
    if let Some(iv) = intervals.intervals().iter().find(|iv| iv.end() > w.len()) {
        return Err(Error::invalid(format!("interval {iv} exceeds series length {}", w.len())));
    }
    let prefix = OuterPrefix::new(w);
    let trim = MarginTrim { margin: buffer };
    let directions = intervals
        .intervals()
        .par_iter()
        .map(|iv| {
            let Some(win) = trim.window(iv.start() - 1, iv.end()) else {
                return Ok(DVector::zeros(w.dim()));
            };
            let mut best: Option<(f64, DVector<f64>)> = None;
            for t in win.t_lo..=win.t_hi {
                let pair = leading_eigenpair(&prefix.cusum(win.s, t, win.e))?;
                if best.as_ref().is_none_or(|(v, _)| pair.value.abs() > *v) {
                    best = Some((pair.value.abs(), pair.vector));
                }
            }
            Ok(match best {
                Some((norm, v)) if norm > 0.0 => v,
                _ => DVector::zeros(w.dim()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProjectionSet { directions })
}

/// Squared projections `(u' x_t)^2`.
pub fn projected_square_series(x: &VectorSeries, u: &DVector<f64>) -> Result<MeanSeries> {
    if u.len() != x.dim() {
        return Err(Error::invalid(format!(
            "direction has dimension {}, series has {}",
            u.len(),
            x.dim()
        )));
    }
    MeanSeries::new(
        x.rows()
            .map(|row| {
                let p: f64 = row.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
                p * p
            })
            .collect(),
    )
}

/// Buffers of the two stages. `None` selects the defaults `p * log T` for
/// direction estimation and `log T` for the projected scan.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WbsipOptions {
    pub pc_buffer: Option<f64>,
    pub scan_margin: Option<f64>,
}

struct ProjectedScore {
    series: Vec<MeanSeries>,
}

impl ScanScore for ProjectedScore {
    fn score(&self, interval: usize, s: usize, t: usize, e: usize) -> f64 {
        crate::mean::cusum(&self.series[interval], s, t, e)
            .map(f64::abs)
            .unwrap_or(0.0)
    }

    fn depends_on_interval(&self) -> bool {
        true
    }
}

/// Default threshold `C * sigma^2 * sqrt(log T)` with `sigma^2` the largest
/// eigenvalue of the pooled second moment `T^-1 sum x_t x_t'` and
/// `C = COV_TAU_CONSTANT`.
pub fn default_tau(x: &VectorSeries) -> f64 {
    let p = x.dim();
    let mut m = DMatrix::zeros(p, p);
    for r in x.rows() {
        for i in 0..p {
            for j in 0..p {
                m[(i, j)] += r[i] * r[j];
            }
        }
    }
    m /= x.len().max(1) as f64;
    let sigma2 = crate::linalg::operator_norm(&m).unwrap_or(0.0).max(1e-12);
    COV_TAU_CONSTANT * sigma2 * (x.len() as f64).ln().sqrt()
}

pub const COV_TAU_CONSTANT: f64 = 2.75;

/// Wild binary segmentation through independent projection with default
/// buffers.
pub fn detect_cov_wbsip(
    x: &VectorSeries,
    w: &VectorSeries,
    intervals: &RandomIntervalSet,
    tau: f64,
) -> Result<ChangePointSet> {
    detect_cov_wbsip_with(x, w, intervals, tau, &WbsipOptions::default())
}

/// [`detect_cov_wbsip`] with explicit buffers. Change points are on the
/// time scale of `x` and `w`.
pub fn detect_cov_wbsip_with(
    x: &VectorSeries,
    w: &VectorSeries,
    intervals: &RandomIntervalSet,
    tau: f64,
    options: &WbsipOptions,
) -> Result<ChangePointSet> {
    if x.len() != w.len() || x.dim() != w.dim() {
        return Err(Error::invalid(format!(
            "samples differ in shape: {}x{} vs {}x{}",
            x.len(),
            x.dim(),
            w.len(),
            w.dim()
        )));
    }
    if x.len() < 4 {
        return Err(Error::invalid("covariance detection needs at least 4 observations"));
    }
    let log_t = (x.len() as f64).ln();
    let pc_buffer = options.pc_buffer.unwrap_or(x.dim() as f64 * log_t);
    let margin = options.scan_margin.unwrap_or(log_t);
    let dirs = pc_directions(w, intervals, pc_buffer)?;
    let series = dirs
        .directions()
        .par_iter()
        .map(|u| projected_square_series(x, u))
        .collect::<Result<Vec<_>>>()?;
    wbs_scan(
        x.len(),
        &ProjectedScore { series },
        intervals,
        tau,
        &MarginTrim { margin },
    )
}

/// Odd- and even-indexed halves; see [`VectorSeries::split_even_odd`].
pub fn split_even_odd(x: &VectorSeries) -> Result<(VectorSeries, VectorSeries)> {
    x.split_even_odd()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::sample_intervals;
    use crate::types::Interval;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Draws `N(0, I + theta v v')` before `eta` and `N(0, I)` after, with
    /// `v = e_1 + e_2` normalised.
    fn rank_one(len: usize, p: usize, eta: usize, theta: f64, seed: u64) -> VectorSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = DVector::from_fn(p, |i, _| if i < 2 { 0.5f64.sqrt() } else { 0.0 });
        let mut data = Vec::with_capacity(len * p);
        for t in 1..=len {
            let z = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
            let g: f64 = StandardNormal.sample(&mut rng);
            let scale = if t >= eta { theta.sqrt() } else { 0.0 };
            data.extend((z + &v * (g * scale)).iter());
        }
        VectorSeries::from_flat(data, p).unwrap()
    }

    #[test]
    fn short_intervals_give_sentinel() {
        let w = rank_one(40, 3, 20, 2.0, 1);
        let ivs = RandomIntervalSet::from_intervals(vec![
            Interval::new(1, 6).unwrap(),
            Interval::new(1, 40).unwrap(),
        ])
        .unwrap();
        let dirs = pc_directions(&w, &ivs, 3.0).unwrap();
        assert_eq!(dirs.directions()[0].norm(), 0.0);
        assert!((dirs.directions()[1].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn direction_aligns_with_shift() {
        let p = 6;
        let w = rank_one(400, p, 201, 8.0, 5);
        let ivs = RandomIntervalSet::from_intervals(vec![Interval::new(1, 400).unwrap()]).unwrap();
        let dirs = pc_directions(&w, &ivs, default_pc_buffer(&w)).unwrap();
        let u = &dirs.directions()[0];
        let v = DVector::from_fn(p, |i, _| if i < 2 { 0.5f64.sqrt() } else { 0.0 });
        assert!(u.dot(&v).abs() >= 0.99, "alignment {}", u.dot(&v));
    }

    #[test]
    fn projection_examples() {
        let x = VectorSeries::from_rows(&[vec![3.0, 4.0], vec![-1.0, 2.0]]).unwrap();
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(projected_square_series(&x, &e1).unwrap().values(), &[9.0, 1.0]);
        let zero = DVector::zeros(2);
        assert_eq!(projected_square_series(&x, &zero).unwrap().values(), &[0.0, 0.0]);
        assert!(projected_square_series(&x, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn outer_cusum_matches_direct() {
        let x = rank_one(12, 3, 6, 1.0, 2);
        let m = outer_product_cusum(&x, 2, 7, 11).unwrap();
        let (wl, wr) = cusum_weights(2, 7, 11);
        let mut direct = DMatrix::zeros(3, 3);
        for t in 2..11 {
            let r = DVector::from_row_slice(x.row(t));
            let w = if t < 7 { wl } else { -wr };
            direct += &r * r.transpose() * w;
        }
        assert!((m - direct).norm() < 1e-10);
    }

    #[test]
    fn detects_single_shift_on_halves() {
        let full = rank_one(1200, 10, 301, 5.0, 17);
        let (xo, xe) = full.split_even_odd().unwrap();
        let ivs = sample_intervals(xo.len(), 100, None, 17).unwrap();
        let tau = default_tau(&xo);
        let found = detect_cov_wbsip(&xo, &xe, &ivs, tau).unwrap().to_full_scale();
        assert_eq!(found.len(), 1, "{found:?}");
        assert!(found.as_slice()[0].abs_diff(301) <= 50);
    }

    #[test]
    fn found_points_respect_margins() {
        let full = rank_one(600, 4, 200, 3.0, 9);
        let (xo, xe) = full.split_even_odd().unwrap();
        let ivs = sample_intervals(xo.len(), 60, None, 3).unwrap();
        let found = detect_cov_wbsip(&xo, &xe, &ivs, 1.0).unwrap();
        let margin = (xo.len() as f64).ln();
        for &p in found.as_slice() {
            assert!(p as f64 - 1.0 >= margin && (p as f64) <= xo.len() as f64 - margin + 1.0);
        }
    }

    #[test]
    fn rejects_mismatched_halves() {
        let a = rank_one(20, 2, 10, 1.0, 1);
        let b = rank_one(22, 2, 10, 1.0, 1);
        let ivs = sample_intervals(20, 5, None, 1).unwrap();
        assert!(detect_cov_wbsip(&a, &b, &ivs, 1.0).is_err());
    }
}
