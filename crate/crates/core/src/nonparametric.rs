//! Distributional change points: the Kolmogorov-Smirnov CUSUM for scalar
//! series and the kernel-density CUSUM for multivariate series.

use std::f64::consts::PI;

use crate::engine::{wbs_scan, IdentityTrim, RandomIntervalSet, ScanScore, ScanWindow};
use crate::error::{Error, Result};
use crate::mean::MeanSeries;
use crate::series::VectorSeries;
use crate::types::ChangePointSet;
use crate::{check_triple, cusum_scale};

/// Largest series accepted by the kernel-density scan, whose `T x T` kernel
/// table is held in memory.
pub const KDE_MAX_LEN: usize = 6000;

/// KS-CUSUM over the window values `x[s..e]` at split `t`, computed
/// directly by sorting.
fn ks_direct(x: &[f64], s: usize, t: usize, e: usize) -> f64 {
    let mut vals: Vec<(f64, bool)> = (s..e).map(|i| (x[i], i < t)).collect();
    vals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nl, nr) = ((t - s) as f64, (e - t) as f64);
    let (mut cl, mut cr) = (0usize, 0usize);
    let mut best = 0.0f64;
    let mut i = 0;
    while i < vals.len() {
        let v = vals[i].0;
        while i < vals.len() && vals[i].0 == v {
            if vals[i].1 {
                cl += 1;
            } else {
                cr += 1;
            }
            i += 1;
        }
        best = best.max((cl as f64 / nl - cr as f64 / nr).abs());
    }
    cusum_scale(s, t, e) * best
}

/// Kolmogorov-Smirnov CUSUM: `sqrt((t-s)(e-t)/(e-s))` times the largest gap
/// between the empirical CDFs of `s+1..=t` and `t+1..=e`, both normalised by
/// their counts, over all observed values.
pub fn ks_cusum(x: &MeanSeries, s: usize, t: usize, e: usize) -> Result<f64> {
    check_triple(s, t, e, x.len())?;
    Ok(ks_direct(x.values(), s, t, e))
}

/// KS-CUSUM as a scan statistic. Each window is scanned in `O(L D)` for `L`
/// observations with `D` distinct values.
#[derive(Debug, Clone, Copy)]
pub struct KsScore<'a>(pub &'a MeanSeries);

impl ScanScore for KsScore<'_> {
    fn score(&self, _interval: usize, s: usize, t: usize, e: usize) -> f64 {
        ks_direct(self.0.values(), s, t, e)
    }

    fn best_split(&self, _interval: usize, w: &ScanWindow) -> (usize, f64) {
        let x = self.0.values();
        let mut sorted: Vec<f64> = x[w.s..w.e].to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let rank = |v: f64| sorted.partition_point(|&u| u < v);
        let ranks: Vec<usize> = x[w.s..w.e].iter().map(|&v| rank(v)).collect();

        let mut total = vec![0usize; sorted.len()];
        for &r in &ranks {
            total[r] += 1;
        }
        let mut left = vec![0usize; sorted.len()];
        for &r in &ranks[..w.t_lo - w.s] {
            left[r] += 1;
        }

        let mut best = (w.t_lo, f64::NEG_INFINITY);
        for t in w.t_lo..=w.t_hi {
            if t > w.t_lo {
                left[ranks[t - 1 - w.s]] += 1;
            }
            let (nl, nr) = ((t - w.s) as f64, (w.e - t) as f64);
            let (mut cl, mut ct) = (0usize, 0usize);
            let mut gap = 0.0f64;
            for (l, a) in left.iter().zip(&total) {
                cl += l;
                ct += a;
                gap = gap.max((cl as f64 / nl - (ct - cl) as f64 / nr).abs());
            }
            let v = cusum_scale(w.s, t, w.e) * gap;
            if v > best.1 {
                best = (t, v);
            }
        }
        best
    }
}

/// Default KS threshold `1.0 * sqrt(log T)`, calibrated on null simulations.
pub fn default_tau_ks(len: usize) -> f64 {
    KS_TAU_CONSTANT * (len as f64).ln().sqrt()
}

pub const KS_TAU_CONSTANT: f64 = 1.0;

/// Wild binary segmentation with the KS-CUSUM.
pub fn detect_ks_wbs(
    x: &MeanSeries,
    intervals: &RandomIntervalSet,
    tau: f64,
) -> Result<ChangePointSet> {
    wbs_scan(x.len(), &KsScore(x), intervals, tau, &IdentityTrim)
}

/// Kernel families for density estimation, each normalised to integrate to
/// one on `R^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Gaussian,
    Epanechnikov,
    UniformBall,
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "epanechnikov" => Ok(Self::Epanechnikov),
            "uniform-ball" | "uniform" => Ok(Self::UniformBall),
            other => Err(Error::invalid(format!("unknown density kernel '{other}'"))),
        }
    }
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::Epanechnikov => "epanechnikov",
            Self::UniformBall => "uniform-ball",
        })
    }
}

/// Volume of the unit ball in `R^p`.
pub fn unit_ball_volume(p: usize) -> f64 {
    match p {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(p - 2) * 2.0 * PI / p as f64,
    }
}

/// Density kernel with bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
    dim: usize,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64, dim: usize) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if dim == 0 {
            return Err(Error::invalid("kernel dimension must be at least 1"));
        }
        Ok(Self { family, bandwidth, dim })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Unscaled kernel at squared norm `r2`.
    fn profile(&self, r2: f64) -> f64 {
        let p = self.dim as f64;
        match self.family {
            KernelFamily::Gaussian => (2.0 * PI).powf(-p / 2.0) * (-0.5 * r2).exp(),
            KernelFamily::Epanechnikov => {
                if r2 < 1.0 {
                    (p + 2.0) / (2.0 * unit_ball_volume(self.dim)) * (1.0 - r2)
                } else {
                    0.0
                }
            }
            KernelFamily::UniformBall => {
                if r2 <= 1.0 {
                    1.0 / unit_ball_volume(self.dim)
                } else {
                    0.0
                }
            }
        }
    }

    /// `h^{-p} k((a - b) / h)`.
    pub fn evaluate(&self, a: &[f64], b: &[f64]) -> f64 {
        let h = self.bandwidth;
        let r2: f64 = a.iter().zip(b).map(|(x, y)| ((x - y) / h).powi(2)).sum();
        self.profile(r2) / h.powi(self.dim as i32)
    }

    /// `integral of k^2` for the unscaled kernel.
    pub fn roughness(&self) -> f64 {
        let p = self.dim as f64;
        match self.family {
            KernelFamily::Gaussian => (4.0 * PI).powf(-p / 2.0),
            KernelFamily::Epanechnikov => 2.0 * (p + 2.0) / (unit_ball_volume(self.dim) * (p + 4.0)),
            KernelFamily::UniformBall => 1.0 / unit_ball_volume(self.dim),
        }
    }
}

/// Rule-of-thumb bandwidth `0.9 * s * T^{-1/(p+4)}`, with `s` the mean over
/// coordinates of the interquartile range divided by 1.349.
pub fn default_bandwidth(x: &VectorSeries) -> f64 {
    let p = x.dim();
    let mut spread = 0.0;
    for j in 0..p {
        let mut col: Vec<f64> = x.rows().map(|r| r[j]).collect();
        col.sort_by(f64::total_cmp);
        let q = |f: f64| {
            let pos = f * (col.len() - 1) as f64;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            col[lo] + (col[hi] - col[lo]) * (pos - lo as f64)
        };
        spread += (q(0.75) - q(0.25)) / 1.349;
    }
    let spread = (spread / p as f64).max(1e-6);
    0.9 * spread * (x.len() as f64).powf(-1.0 / (p as f64 + 4.0))
}

/// Kernel-density CUSUM scan over a fixed series.
///
/// Holds the kernel table `K[i][j] = h^{-p} k((X_i - X_j)/h)` as row prefix
/// sums, so each density difference at every data point costs `O(T)`.
#[derive(Debug, Clone)]
pub struct KdeScore {
    len: usize,
    prefix: Vec<f64>,
}

impl KdeScore {
    pub fn new(x: &VectorSeries, kernel: &KernelSpec) -> Result<Self> {
        if kernel.dim() != x.dim() {
            return Err(Error::invalid(format!(
                "kernel dimension {} does not match series dimension {}",
                kernel.dim(),
                x.dim()
            )));
        }
        let len = x.len();
        if len > KDE_MAX_LEN {
            return Err(Error::invalid(format!(
                "kernel-density scan supports at most {KDE_MAX_LEN} observations, got {len}"
            )));
        }
        use rayon::prelude::*;
        let mut prefix = vec![0.0; len * (len + 1)];
        prefix.par_chunks_mut(len + 1).enumerate().for_each(|(i, row)| {
            let xi = x.row(i);
            for j in 0..len {
                row[j + 1] = row[j] + kernel.evaluate(xi, x.row(j));
            }
        });
        Ok(Self { len, prefix })
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.prefix[i * (self.len + 1)..(i + 1) * (self.len + 1)]
    }

    /// Density estimate from observations `a+1..=b` evaluated at `X_{i+1}`.
    #[inline]
    fn density(&self, i: usize, a: usize, b: usize) -> f64 {
        let r = self.row(i);
        (r[b] - r[a]) / (b - a) as f64
    }

    fn value(&self, s: usize, t: usize, e: usize) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.len {
            best = best.max((self.density(i, s, t) - self.density(i, t, e)).abs());
        }
        cusum_scale(s, t, e) * best
    }

    /// Largest full-sample density estimate over the data points.
    pub fn max_density(&self) -> f64 {
        (0..self.len)
            .map(|i| self.density(i, 0, self.len))
            .fold(0.0, f64::max)
    }
}

impl ScanScore for KdeScore {
    fn score(&self, _interval: usize, s: usize, t: usize, e: usize) -> f64 {
        self.value(s, t, e)
    }
}

/// Kernel-density CUSUM at `(s, t, e)`: the scaled largest gap between the
/// density estimates of `s+1..=t` and `t+1..=e` over all `T` data points.
pub fn kde_cusum(x: &VectorSeries, s: usize, t: usize, e: usize, kernel: &KernelSpec) -> Result<f64> {
    check_triple(s, t, e, x.len())?;
    if kernel.dim() != x.dim() {
        return Err(Error::invalid(format!(
            "kernel dimension {} does not match series dimension {}",
            kernel.dim(),
            x.dim()
        )));
    }
    let f = |a: usize, b: usize, z: &[f64]| {
        (a..b).map(|j| kernel.evaluate(z, x.row(j))).sum::<f64>() / (b - a) as f64
    };
    let best = x
        .rows()
        .map(|z| (f(s, t, z) - f(t, e, z)).abs())
        .fold(0.0, f64::max);
    Ok(cusum_scale(s, t, e) * best)
}

/// Default kernel-density threshold
/// `C * sqrt(p log T) * sqrt(max f * R(k) / h^p)`: the null standard
/// deviation of the scaled density gap at the densest data point times a
/// multiple of `sqrt(p log T)`, with `C = KDE_TAU_CONSTANT` calibrated on
/// null simulations in one and two dimensions.
pub fn default_tau_kde(score: &KdeScore, kernel: &KernelSpec) -> f64 {
    let noise = (score.max_density() * kernel.roughness()
        / kernel.bandwidth().powi(kernel.dim() as i32))
    .sqrt();
    KDE_TAU_CONSTANT * (kernel.dim() as f64 * (score.len as f64).ln()).sqrt() * noise
}

pub const KDE_TAU_CONSTANT: f64 = 2.1;

/// Wild binary segmentation with the kernel-density CUSUM.
pub fn detect_kde_wbs(
    x: &VectorSeries,
    intervals: &RandomIntervalSet,
    tau: f64,
    kernel: &KernelSpec,
) -> Result<ChangePointSet> {
    let score = KdeScore::new(x, kernel)?;
    wbs_scan(x.len(), &score, intervals, tau, &IdentityTrim)
}
