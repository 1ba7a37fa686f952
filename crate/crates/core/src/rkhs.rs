//! Kernel segmentation: the within-segment scatter in a reproducing kernel
//! Hilbert space as a segment cost, penalised detection and refinement.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::engine::{refinement_windows, solve_min_partition, Refined, SegmentCost};
use crate::error::{Error, Result};
use crate::series::VectorSeries;
use crate::types::{ChangePointSet, Interval};

/// Default limit on the series length, whose `T x T` Gram table is held in
/// memory.
pub const GRAM_MAX_LEN: usize = 20_000;

/// Positive semidefinite kernels on `R^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `<x, y>`.
    Linear,
    /// `exp(-gamma |x - y|^2)`.
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(Error::invalid(
                format!("rbf gamma must be positive, got {gamma}"),
            )),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn evaluate(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// Median heuristic `gamma = 1 / median |x_i - x_j|^2` over pairs from a
/// seeded subsample of at most 1000 observations; `1.0` if the median is 0.
pub fn median_heuristic_gamma(x: &VectorSeries, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx: Vec<usize> = if x.len() > 1000 {
        let mut v = sample(&mut rng, x.len(), 1000).into_vec();
        v.sort_unstable();
        v
    } else {
        (0..x.len()).collect()
    };
    let mut d2 = Vec::with_capacity(idx.len() * idx.len().saturating_sub(1) / 2);
    for (k, &i) in idx.iter().enumerate() {
        for &j in &idx[k + 1..] {
            d2.push(
                x.row(i)
                    .iter()
                    .zip(x.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>(),
            );
        }
    }
    if d2.is_empty() {
        return 1.0;
    }
    let med = crate::engine::median(&mut d2);
    if med > 0.0 {
        1.0 / med
    } else {
        1.0
    }
}

/// Symmetric `T x T` matrix `g_st = k(X_s, X_t)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    data: Vec<f64>,
}

impl GramMatrix {
    /// Wraps a row-major square matrix, checking symmetry and finiteness.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::invalid(format!(
                "{} entries do not form a {n}x{n} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("Gram matrix has non-finite entries"));
        }
        for i in 0..n {
            for j in i + 1..n {
                if data[i * n + j] != data[j * n + i] {
                    return Err(Error::invalid(format!("Gram matrix is not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Entry `(i, j)`, 0-based.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

fn check_len(len: usize, max_len: usize) -> Result<()> {
    if len > max_len {
        return Err(Error::invalid(format!(
            "kernel methods support at most {max_len} observations, got {len}"
        )));
    }
    Ok(())
}

/// Materialises the Gram matrix of `x` under `kernel`.
pub fn gram(x: &VectorSeries, kernel: Kernel) -> Result<GramMatrix> {
    kernel.validate()?;
    check_len(x.len(), GRAM_MAX_LEN)?;
    let n = x.len();
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
        for (j, g) in row.iter_mut().enumerate() {
            *g = kernel.evaluate(x.row(i.min(j)), x.row(i.max(j)));
        }
    });
    GramMatrix::from_row_major(n, data)
}

/// Kernel scatter cost
/// `H(I) = sum_{t in I} g_tt - |I|^{-1} sum_{s,t in I} g_st`.
///
/// Row prefix sums of the Gram matrix give the block sum of `[a, b]` by a
/// recurrence over `a = b, b-1, ..`, which [`SegmentCost::costs_ending_at`]
/// shares across all intervals ending at `b`. Values that come out
/// marginally negative from rounding are clamped to zero; values below
/// `-1e-10 * max(1, sum of the diagonal)` signal a matrix that is not
/// positive semidefinite and are reported as non-finite.
#[derive(Debug, Clone)]
pub struct KernelCost {
    n: usize,
    /// `prefix[i * (n + 1) + j] = sum_{l < j} g_il`.
    prefix: Vec<f64>,
    diag: Vec<f64>,
    diag_prefix: Vec<f64>,
}

impl KernelCost {
    pub fn new(g: &GramMatrix) -> Self {
        Self::build(g.len(), |i, j| g.get(i, j))
    }

    /// Builds the cost directly from observations. The linear kernel is
    /// evaluated on coordinate-wise centred observations, which leaves every
    /// cost unchanged and avoids cancellation for series far from zero.
    pub fn from_series(x: &VectorSeries, kernel: Kernel) -> Result<Self> {
        Self::from_series_capped(x, kernel, GRAM_MAX_LEN)
    }

    pub fn from_series_capped(x: &VectorSeries, kernel: Kernel, max_len: usize) -> Result<Self> {
        kernel.validate()?;
        check_len(x.len(), max_len)?;
        match kernel {
            Kernel::Linear => {
                let p = x.dim();
                let mut centre = vec![0.0; p];
                for r in x.rows() {
                    for (c, v) in centre.iter_mut().zip(r) {
                        *c += v;
                    }
                }
                centre.iter_mut().for_each(|c| *c /= x.len() as f64);
                let centred: Vec<f64> = x
                    .rows()
                    .flat_map(|r| r.iter().zip(&centre).map(|(v, c)| v - c).collect::<Vec<_>>())
                    .collect();
                let xc = VectorSeries::from_flat(centred, p)?;
                Ok(Self::build(x.len(), |i, j| kernel.evaluate(xc.row(i.min(j)), xc.row(i.max(j)))))
            }
            Kernel::Rbf { .. } => {
                Ok(Self::build(x.len(), |i, j| kernel.evaluate(x.row(i.min(j)), x.row(i.max(j)))))
            }
        }
    }

    fn build(n: usize, entry: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let mut prefix = vec![0.0; n * (n + 1)];
        prefix.par_chunks_mut(n + 1).enumerate().for_each(|(i, row)| {
            for j in 0..n {
                row[j + 1] = row[j] + entry(i, j);
            }
        });
        let diag: Vec<f64> = (0..n).map(|i| entry(i, i)).collect();
        let mut diag_prefix = Vec::with_capacity(n + 1);
        diag_prefix.push(0.0);
        let mut acc = 0.0;
        for d in &diag {
            acc += d;
            diag_prefix.push(acc);
        }
        Self {
            n,
            prefix,
            diag,
            diag_prefix,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Sum of row `i` over columns `a..b` (0-based, half-open).
    #[inline]
    fn row_sum(&self, i: usize, a: usize, b: usize) -> f64 {
        let r = &self.prefix[i * (self.n + 1)..];
        r[b] - r[a]
    }

    /// Cost of 0-based `start..=end` given the block sum of that square.
    #[inline]
    fn finish(&self, start: usize, end: usize, block: f64) -> f64 {
        let d = self.diag_prefix[end + 1] - self.diag_prefix[start];
        let v = d - block / (end - start + 1) as f64;
        if v >= 0.0 {
            v
        } else if v > -1e-10 * d.abs().max(1.0) {
            0.0
        } else {
            f64::NAN
        }
    }

    /// Adds row/column `start` to the block `start+1..=end`.
    #[inline]
    fn extend_block(&self, block: f64, start: usize, end: usize) -> f64 {
        block + 2.0 * self.row_sum(start, start + 1, end + 1) + self.diag[start]
    }

    /// Cost of an interval, or a numeric error for non-PSD input.
    pub fn try_cost(&self, interval: Interval) -> Result<f64> {
        interval.check_within(self.n)?;
        let v = self.cost(interval);
        if v.is_nan() {
            return Err(Error::numeric(format!(
                "kernel cost of {interval} is negative; the Gram matrix is not positive semidefinite"
            )));
        }
        Ok(v)
    }
}

impl SegmentCost for KernelCost {
    fn cost(&self, interval: Interval) -> f64 {
        let (start, end) = (interval.start() - 1, interval.end() - 1);
        let mut block = 0.0;
        for a in (start..=end).rev() {
            block = self.extend_block(block, a, end);
        }
        self.finish(start, end, block)
    }

    fn costs_ending_at(&self, end: usize, out: &mut [f64]) {
        let e = end - 1;
        let mut block = 0.0;
        for a in (0..end).rev() {
            block = self.extend_block(block, a, e);
            out[a] = self.finish(a, e, block);
        }
    }
}

/// Kernel scatter cost of `interval` under Gram matrix `g`.
pub fn kernel_cost(g: &GramMatrix, interval: Interval) -> Result<f64> {
    KernelCost::new(g).try_cost(interval)
}

/// Default PDP penalty `C * v * log T`, where `v` estimates the
/// within-segment feature-space variance.
///
/// For the linear kernel `v` is the sum over coordinates of the squared
/// first-difference noise scale and `C = 2`, so on scalar data the penalty
/// matches [`crate::mean::default_lambda`]. For the rbf kernel `v` is the
/// mean of `|phi(x_{t+1}) - phi(x_t)|^2 / 2` over consecutive pairs and
/// `C = RBF_LAMBDA_CONSTANT`.
pub fn default_lambda(x: &VectorSeries, kernel: Kernel) -> f64 {
    let log_t = (x.len() as f64).ln();
    match kernel {
        Kernel::Linear => {
            let v: f64 = (0..x.dim())
                .map(|j| {
                    let col: Vec<f64> = x.rows().map(|r| r[j]).collect();
                    let s = crate::mean::tuning_noise_scale(&col);
                    s * s
                })
                .sum();
            crate::mean::LAMBDA_CONSTANT * v * log_t
        }
        Kernel::Rbf { .. } => {
            let n = x.len();
            let v = (1..n)
                .map(|t| {
                    let (a, b) = (x.row(t - 1), x.row(t));
                    0.5 * (kernel.evaluate(a, a) + kernel.evaluate(b, b)) - kernel.evaluate(a, b)
                })
                .sum::<f64>()
                / (n.max(2) - 1) as f64;
            RBF_LAMBDA_CONSTANT * v.max(1e-10) * log_t
        }
    }
}

pub const RBF_LAMBDA_CONSTANT: f64 = 2.0;

/// Penalised kernel segmentation.
pub fn detect_kernel_pdp(x: &VectorSeries, kernel: Kernel, lambda: f64) -> Result<ChangePointSet> {
    let cost = KernelCost::from_series(x, kernel)?;
    Ok(solve_min_partition(x.len(), &cost, lambda)?.change_points)
}

/// Moves each initial estimate to the split minimising the two-sided kernel
/// cost inside its refinement window.
pub fn refine_kernel(x: &VectorSeries, kernel: Kernel, initial: &ChangePointSet) -> Result<Refined> {
    if initial.is_empty() {
        return Err(Error::invalid("refinement needs at least one initial change point"));
    }
    ChangePointSet::new(initial.as_slice().to_vec(), x.len())?;
    let cost = KernelCost::from_series(x, kernel)?;
    refine_with_cost(&cost, initial, x.len())
}

pub(crate) fn refine_with_cost(
    cost: &KernelCost,
    initial: &ChangePointSet,
    len: usize,
) -> Result<Refined> {
    let windows = refinement_windows(initial, len);
    let results = windows
        .par_iter()
        .zip(initial.as_slice().par_iter())
        .map(|(w, &nu)| -> Result<(usize, bool)> {
            if w.len() < 2 {
                return Ok((nu, true));
            }
            let mut best = (nu, f64::INFINITY);
            for c in w.start() + 1..=w.end() {
                let v = cost.try_cost(Interval::new_unchecked(w.start(), c - 1))?
                    + cost.try_cost(Interval::new_unchecked(c, w.end()))?;
                if v < best.1 {
                    best = (c, v);
                }
            }
            Ok((best.0, false))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Refined {
        flagged: results
            .iter()
            .enumerate()
            .filter_map(|(k, r)| r.1.then_some(k))
            .collect(),
        points: ChangePointSet::from_unsorted(results.into_iter().map(|r| r.0).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mean::{detect_mean_pdp, mean_cost, MeanSeries};
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn scalars(x: &[f64]) -> VectorSeries {
        VectorSeries::from_scalars(x).unwrap()
    }

    fn iv(s: usize, e: usize) -> Interval {
        Interval::new(s, e).unwrap()
    }

    #[test]
    fn gram_examples() {
        let g = gram(&scalars(&[1.0, 2.0]), Kernel::Linear).unwrap();
        assert_eq!(g.row(0), &[1.0, 2.0]);
        assert_eq!(g.row(1), &[2.0, 4.0]);
        let g = gram(&scalars(&[0.3, -1.0, 4.0]), Kernel::Rbf { gamma: 0.7 }).unwrap();
        assert!((0..3).all(|i| g.get(i, i) == 1.0));
        assert!((0..3).all(|i| (0..3).all(|j| g.get(i, j) == g.get(j, i))));
        assert!(gram(&scalars(&[1.0]), Kernel::Rbf { gamma: 0.0 }).is_err());
    }

    #[test]
    fn cost_examples() {
        let g = gram(&scalars(&[1.0, 2.0, 3.0]), Kernel::Linear).unwrap();
        assert!((kernel_cost(&g, iv(1, 3)).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(kernel_cost(&g, iv(2, 2)).unwrap(), 0.0);
        let c = gram(&scalars(&[1.5; 6]), Kernel::Rbf { gamma: 2.0 }).unwrap();
        assert_eq!(kernel_cost(&c, iv(1, 6)).unwrap(), 0.0);
    }

    #[test]
    fn negative_definite_input_is_rejected() {
        let g = GramMatrix::from_row_major(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(kernel_cost(&g, iv(1, 2)), Err(Error::Numeric(_))));
    }

    #[test]
    fn batch_costs_match_single_costs_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = scalars(&(0..40).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>());
        let c = KernelCost::from_series(&x, Kernel::Rbf { gamma: 0.5 }).unwrap();
        let mut out = vec![0.0; 25];
        c.costs_ending_at(25, &mut out);
        for s in 1..=25 {
            assert_eq!(out[s - 1], c.cost(iv(s, 25)));
        }
    }

    #[test]
    fn linear_kernel_equals_mean_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..20 {
            let n = rng.random_range(2..60);
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0) + 50.0).collect();
            let m = MeanSeries::new(raw.clone()).unwrap();
            let c = KernelCost::from_series(&scalars(&raw), Kernel::Linear).unwrap();
            for _ in 0..10 {
                let s = rng.random_range(1..=n);
                let e = rng.random_range(s..=n);
                assert!((c.cost(iv(s, e)) - mean_cost(&m, iv(s, e))).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn linear_pdp_matches_mean_pdp() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let x: Vec<f64> = (0..80)
                .map(|i| if (20..50).contains(&i) { 2.0 } else { 0.0 } + rng.random_range(-1.0..1.0))
                .collect();
            let a = detect_kernel_pdp(&scalars(&x), Kernel::Linear, 4.0).unwrap();
            let b = detect_mean_pdp(&MeanSeries::new(x).unwrap(), 4.0).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn scatter_decreases_under_splitting() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = scalars(&(0..50).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>());
        let c = KernelCost::from_series(&x, Kernel::Rbf { gamma: 0.3 }).unwrap();
        for _ in 0..100 {
            let s = rng.random_range(1..49);
            let e = rng.random_range(s + 1..=50);
            let m = rng.random_range(s + 1..=e);
            let whole = c.cost(iv(s, e));
            assert!(whole >= 0.0);
            assert!(whole + 1e-10 >= c.cost(iv(s, m - 1)) + c.cost(iv(m, e)));
        }
    }

    #[test]
    fn gram_is_psd_on_principal_minors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = VectorSeries::from_flat((0..120).map(|_| rng.random_range(-2.0..2.0)).collect(), 3).unwrap();
        let g = gram(&x, Kernel::Rbf { gamma: 0.8 }).unwrap();
        for _ in 0..10 {
            let idx = sample(&mut rng, g.len(), 8).into_vec();
            let m = DMatrix::from_fn(8, 8, |a, b| g.get(idx[a], idx[b]));
            let min = m.symmetric_eigenvalues().min();
            assert!(min >= -1e-8);
        }
    }

    #[test]
    fn rbf_sees_variance_change() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (a, b) = (Normal::new(0.0, 1.0).unwrap(), Normal::new(0.0, 3.0).unwrap());
        let x: Vec<f64> = (0..300)
            .map(|t| if t < 150 { a.sample(&mut rng) } else { b.sample(&mut rng) })
            .collect();
        let xs = scalars(&x);
        let gamma = median_heuristic_gamma(&xs, 0);
        let rbf = detect_kernel_pdp(&xs, Kernel::Rbf { gamma }, 2.0 * (300f64).ln()).unwrap();
        assert_eq!(rbf.len(), 1, "{rbf:?}");
        assert!(rbf.as_slice()[0].abs_diff(151) <= 30);
        let sigma2 = {
            let s = crate::engine::estimate_noise_scale(&x).unwrap();
            s * s
        };
        let linear = detect_kernel_pdp(&xs, Kernel::Linear, 1.5 * sigma2 * (300f64).ln()).unwrap();
        assert!(linear.iter().all(|p| p.abs_diff(151) > 30) || linear.len() != 1);
    }

    #[test]
    fn refinement() {
        let x: Vec<f64> = (1..=60).map(|t| if t >= 31 { 1.0 } else { 0.0 }).collect();
        let xs = scalars(&x);
        for start in [31, 29, 34] {
            let init = ChangePointSet::new(vec![start], 60).unwrap();
            let out = refine_kernel(&xs, Kernel::Rbf { gamma: 1.0 }, &init).unwrap();
            assert_eq!(out.points.as_slice(), &[31]);
        }
        let init = ChangePointSet::new(vec![10, 31, 50], 60).unwrap();
        assert_eq!(refine_kernel(&xs, Kernel::Linear, &init).unwrap().points.len(), 3);
    }

    #[test]
    fn length_cap() {
        let x = scalars(&[0.0; 10]);
        assert!(KernelCost::from_series_capped(&x, Kernel::Linear, 5).is_err());
    }
}
