//! Piecewise-constant univariate mean: CUSUM, squared-residual cost, and
//! the PDP and WBS detectors built on them.

use crate::engine::{
    estimate_noise_scale, solve_min_partition, wbs_scan, IdentityTrim, RandomIntervalSet,
    ScanScore, SegmentCost,
};
use crate::error::{Error, Result};
use crate::types::{ChangePointSet, Interval};
use crate::{check_triple, cusum_weights};

/// Finite scalar series of length at least 2, with cached prefix sums.
///
/// Prefix sums are taken over the globally centred series, which keeps the
/// squared-residual cost accurate when the level is far from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanSeries {
    x: Vec<f64>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl MeanSeries {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::invalid(format!(
                "series needs at least 2 observations, got {}",
                x.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("observation {} is not finite", i + 1)));
        }
        let centre = x.iter().sum::<f64>() / x.len() as f64;
        let mut sum = Vec::with_capacity(x.len() + 1);
        let mut sum_sq = Vec::with_capacity(x.len() + 1);
        let (mut a, mut b) = (0.0, 0.0);
        sum.push(0.0);
        sum_sq.push(0.0);
        for v in &x {
            let c = v - centre;
            a += c;
            b += c * c;
            sum.push(a);
            sum_sq.push(b);
        }
        Ok(Self { x, sum, sum_sq })
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Centred sum over observations `s+1..=e`.
    #[inline]
    fn centred_sum(&self, s: usize, e: usize) -> f64 {
        self.sum[e] - self.sum[s]
    }

    #[inline]
    fn cusum_unchecked(&self, s: usize, t: usize, e: usize) -> f64 {
        let (wl, wr) = cusum_weights(s, t, e);
        wl * self.centred_sum(s, t) - wr * self.centred_sum(t, e)
    }
}

/// CUSUM statistic comparing `s+1..=t` with `t+1..=e`.
pub fn cusum(x: &MeanSeries, s: usize, t: usize, e: usize) -> Result<f64> {
    check_triple(s, t, e, x.len())?;
    Ok(x.cusum_unchecked(s, t, e))
}

/// Sum of squared deviations from the interval mean.
pub fn mean_cost(x: &MeanSeries, interval: Interval) -> f64 {
    let (s, e) = (interval.start() - 1, interval.end());
    let n = (e - s) as f64;
    let a = x.centred_sum(s, e);
    let v = (x.sum_sq[e] - x.sum_sq[s]) - a * a / n;
    v.max(0.0)
}

impl SegmentCost for MeanSeries {
    fn cost(&self, interval: Interval) -> f64 {
        mean_cost(self, interval)
    }
}

/// `|cusum|` as a WBS scan statistic.
#[derive(Debug, Clone, Copy)]
pub struct MeanCusumScore<'a>(pub &'a MeanSeries);

impl ScanScore for MeanCusumScore<'_> {
    fn score(&self, _interval: usize, s: usize, t: usize, e: usize) -> f64 {
        self.0.cusum_unchecked(s, t, e).abs()
    }
}

/// Noise scale used by the default tuning rules: the first-difference
/// estimate, floored at `1e-5 * max(1, max |x_t|)` so that rounding in the
/// prefix sums of a noiseless series stays far below the penalty.
pub fn tuning_noise_scale(x: &[f64]) -> f64 {
    let sigma = estimate_noise_scale(x).unwrap_or(0.0);
    let peak = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    sigma.max(1e-5 * peak)
}

/// Default PDP penalty `2 * sigma^2 * log T`.
pub fn default_lambda(x: &MeanSeries) -> f64 {
    let sigma = tuning_noise_scale(x.values());
    LAMBDA_CONSTANT * sigma * sigma * (x.len() as f64).ln()
}

pub const LAMBDA_CONSTANT: f64 = 2.0;

/// Default WBS threshold `2 * sigma * sqrt(log T)`.
pub fn default_tau(x: &MeanSeries) -> f64 {
    let sigma = tuning_noise_scale(x.values());
    2.0 * sigma * (x.len() as f64).ln().sqrt()
}

/// Penalised least-squares segmentation.
pub fn detect_mean_pdp(x: &MeanSeries, lambda: f64) -> Result<ChangePointSet> {
    Ok(solve_min_partition(x.len(), x, lambda)?.change_points)
}

/// Wild binary segmentation with the absolute mean CUSUM.
pub fn detect_mean_wbs(
    x: &MeanSeries,
    intervals: &RandomIntervalSet,
    tau: f64,
) -> Result<ChangePointSet> {
    wbs_scan(x.len(), &MeanCusumScore(x), intervals, tau, &IdentityTrim)
}
