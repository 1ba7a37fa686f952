//! Offline change point detection and localisation.
//!
//! Two engines do the heavy lifting: [`engine::solve_min_partition`] solves
//! the penalised minimal partition problem exactly for any additive segment
//! cost, and [`engine::wbs_scan`] runs wild binary segmentation for any scan
//! statistic. Each model module supplies the cost or statistic for one data
//! type:
//!
//! | module | data | detectors |
//! |---|---|---|
//! | [`mean`] | piecewise-constant scalar mean | PDP, WBS |
//! | [`poly`] | piecewise polynomial signal | PDP, local refinement |
//! | [`covariance`] | vectors with piecewise-constant covariance | WBS through independent projection |
//! | [`network`] | adjacency matrix sequences | network binary segmentation, USVT refinement |
//! | [`nonparametric`] | univariate distributions, multivariate densities | KS-CUSUM WBS, kernel-density WBS |
//! | [`rkhs`] | arbitrary observations via a kernel | kernel PDP, refinement |
//!
//! See [`types`] for the index conventions used throughout.

pub mod covariance;
pub mod engine;
mod error;
pub mod linalg;
pub mod mean;
pub mod network;
pub mod nonparametric;
pub mod poly;
pub mod rkhs;
pub mod series;
pub mod types;

pub use error::{Error, Result};
pub use types::{ChangePointSet, Interval, IntervalPartition};

/// Weights `(w_left, w_right)` of the CUSUM statistic at split `t` of
/// `(s, e)`: the statistic is `w_left * sum(s+1..=t) - w_right * sum(t+1..=e)`.
#[inline]
pub(crate) fn cusum_weights(s: usize, t: usize, e: usize) -> (f64, f64) {
    let (s, t, e) = (s as f64, t as f64, e as f64);
    (
        ((e - t) / ((e - s) * (t - s))).sqrt(),
        ((t - s) / ((e - s) * (e - t))).sqrt(),
    )
}

/// `sqrt((t - s)(e - t) / (e - s))`, the scale multiplying a difference of
/// segment means in every CUSUM variant.
#[inline]
pub(crate) fn cusum_scale(s: usize, t: usize, e: usize) -> f64 {
    let (s, t, e) = (s as f64, t as f64, e as f64);
    ((t - s) * (e - t) / (e - s)).sqrt()
}

pub(crate) fn check_triple(s: usize, t: usize, e: usize, len: usize) -> Result<()> {
    if s < t && t < e && e <= len {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "split (s={s}, t={t}, e={e}) must satisfy 0 <= s < t < e <= {len}"
        )))
    }
}
