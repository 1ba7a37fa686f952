//! Dynamic network change points: matrix CUSUMs of adjacency sequences,
//! network binary segmentation on two independent samples, universal
//! singular value thresholding and USVT-based local refinement.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::engine::{refinement_windows, wbs_scan, FractionTrim, RandomIntervalSet, Refined, ScanScore};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::series::{dense_to_upper, upper_to_dense, AdjacencySeries};
use crate::types::ChangePointSet;
use crate::{check_triple, cusum_scale, cusum_weights};

/// Prefix sums of upper triangles, one row of `pairs` values per time.
struct UpperPrefix {
    pairs: usize,
    data: Vec<f64>,
}

impl UpperPrefix {
    fn new(a: &AdjacencySeries) -> Self {
        let pairs = AdjacencySeries::pair_count(a.nodes());
        let mut data = vec![0.0; (a.len() + 1) * pairs];
        for t in 0..a.len() {
            let (prev, next) = data.split_at_mut((t + 1) * pairs);
            let prev = &prev[t * pairs..];
            for ((n, p), &v) in next[..pairs].iter_mut().zip(prev).zip(a.upper(t)) {
                *n = p + v as f64;
            }
        }
        Self { pairs, data }
    }

    #[inline]
    fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.pairs..(t + 1) * self.pairs]
    }

    /// CUSUM of every pair at `(s, t, e)`.
    fn cusum_into(&self, s: usize, t: usize, e: usize, out: &mut [f64]) {
        let (wl, wr) = cusum_weights(s, t, e);
        let (ps, pt, pe) = (self.row(s), self.row(t), self.row(e));
        for (k, o) in out.iter_mut().enumerate() {
            *o = wl * (pt[k] - ps[k]) - wr * (pe[k] - pt[k]);
        }
    }

    /// Frobenius inner product of the CUSUM at `(s, t, e)` with a symmetric
    /// zero-diagonal template given by its upper triangle.
    #[inline]
    fn inner_with(&self, s: usize, t: usize, e: usize, template: &[f64]) -> f64 {
        let (wl, wr) = cusum_weights(s, t, e);
        let (ps, pt, pe) = (self.row(s), self.row(t), self.row(e));
        let mut acc = 0.0;
        for k in 0..self.pairs {
            acc += (wl * (pt[k] - ps[k]) - wr * (pe[k] - pt[k])) * template[k];
        }
        2.0 * acc
    }
}

/// Entrywise CUSUM of the adjacency matrices at `(s, t, e)`.
pub fn matrix_cusum(a: &AdjacencySeries, s: usize, t: usize, e: usize) -> Result<DMatrix<f64>> {
    check_triple(s, t, e, a.len())?;
    let prefix = UpperPrefix::new(a);
    let mut upper = vec![0.0; prefix.pairs];
    prefix.cusum_into(s, t, e, &mut upper);
    Ok(upper_to_dense(a.nodes(), upper))
}

fn check_pair(a: &AdjacencySeries, w: &AdjacencySeries) -> Result<()> {
    if a.len() != w.len() || a.nodes() != w.nodes() {
        return Err(Error::invalid(format!(
            "samples differ in shape: {} snapshots on {} nodes vs {} on {}",
            a.len(),
            a.nodes(),
            w.len(),
            w.nodes()
        )));
    }
    if a.len() < 2 {
        return Err(Error::invalid("network detection needs at least 2 snapshots"));
    }
    Ok(())
}

struct InnerProductScore {
    a: UpperPrefix,
    w: UpperPrefix,
}

impl ScanScore for InnerProductScore {
    fn score(&self, _interval: usize, s: usize, t: usize, e: usize) -> f64 {
        let (wl, wr) = cusum_weights(s, t, e);
        let (as_, at, ae) = (self.a.row(s), self.a.row(t), self.a.row(e));
        let (ws, wt, we) = (self.w.row(s), self.w.row(t), self.w.row(e));
        let mut acc = 0.0;
        for k in 0..self.a.pairs {
            let x = wl * (at[k] - as_[k]) - wr * (ae[k] - at[k]);
            let y = wl * (wt[k] - ws[k]) - wr * (we[k] - wt[k]);
            acc += x * y;
        }
        2.0 * acc
    }
}

/// Largest entrywise mean over the pooled snapshots of both samples.
pub fn estimate_sparsity(a: &AdjacencySeries, w: &AdjacencySeries) -> f64 {
    let pairs = AdjacencySeries::pair_count(a.nodes());
    let mut counts = vec![0u32; pairs];
    for s in [a, w] {
        for t in 0..s.len() {
            for (c, &v) in counts.iter_mut().zip(s.upper(t)) {
                *c += v as u32;
            }
        }
    }
    let total = (a.len() + w.len()).max(1) as f64;
    counts.iter().copied().max().unwrap_or(0) as f64 / total
}

/// Default NBS threshold `rho * n * log^{3/2} T`.
pub fn default_tau1(a: &AdjacencySeries, w: &AdjacencySeries) -> f64 {
    let rho = estimate_sparsity(a, w).max(1.0 / (a.len().max(1) as f64));
    rho * a.nodes() as f64 * (a.len() as f64).ln().powf(1.5)
}

/// Default USVT eigenvalue threshold `(3/4)(4 sqrt(n rho) + log T)`.
pub fn default_tau2(a: &AdjacencySeries, w: &AdjacencySeries) -> f64 {
    let rho = estimate_sparsity(a, w);
    0.75 * (4.0 * (a.nodes() as f64 * rho).sqrt() + (a.len() as f64).ln())
}

/// Default USVT clipping level `rho`.
pub fn default_tau3(a: &AdjacencySeries, w: &AdjacencySeries) -> f64 {
    estimate_sparsity(a, w)
}

/// Network binary segmentation: wild binary segmentation with each
/// intersection trimmed by `1/64` of its length at both ends and the
/// Frobenius inner product of the two samples' matrix CUSUMs as statistic.
pub fn nbs_detect(
    a: &AdjacencySeries,
    w: &AdjacencySeries,
    intervals: &RandomIntervalSet,
    tau1: f64,
) -> Result<ChangePointSet> {
    check_pair(a, w)?;
    let score = InnerProductScore {
        a: UpperPrefix::new(a),
        w: UpperPrefix::new(w),
    };
    wbs_scan(a.len(), &score, intervals, tau1, &FractionTrim { denominator: 64.0 })
}

/// Universal singular value thresholding of a symmetric matrix: keep the
/// eigenpairs with `|lambda| >= tau2`, then clip entries to `[-tau3, tau3]`.
pub fn usvt(a: &DMatrix<f64>, tau2: f64, tau3: f64) -> Result<DMatrix<f64>> {
    if !(tau2 > 0.0) || !(tau3 > 0.0) {
        return Err(Error::invalid(format!(
            "USVT thresholds must be positive, got tau2={tau2}, tau3={tau3}"
        )));
    }
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, n);
    for pair in symmetric_eigen(a)? {
        if pair.value.abs() >= tau2 {
            out += &pair.vector * pair.vector.transpose() * pair.value;
        }
    }
    out.apply(|v| {
        if v.abs() > tau3 {
            *v = v.signum() * tau3;
        }
    });
    Ok(out)
}

/// USVT-based local refinement.
///
/// For each initial estimate the working window runs between midpoints of
/// its neighbours. The template is the USVT of `w`'s matrix CUSUM at the
/// initial split with thresholds `tau2` and `tau3 * Delta_k`, `Delta_k` being
/// the CUSUM scale at that split. The refined point maximises the inner
/// product of `a`'s matrix CUSUM with the template. A degenerate window or
/// an all-zero template keeps the initial point and flags it.
pub fn refine_network(
    a: &AdjacencySeries,
    w: &AdjacencySeries,
    initial: &ChangePointSet,
    tau2: f64,
    tau3: f64,
) -> Result<Refined> {
    check_pair(a, w)?;
    if initial.is_empty() {
        return Err(Error::invalid("refinement needs at least one initial change point"));
    }
    ChangePointSet::new(initial.as_slice().to_vec(), a.len())?;
    let pa = UpperPrefix::new(a);
    let pw = UpperPrefix::new(w);
    let windows = refinement_windows(initial, a.len());

    let results: Vec<(usize, bool)> = windows
        .par_iter()
        .zip(initial.as_slice().par_iter())
        .map(|(win, &nu)| -> Result<(usize, bool)> {
            let (s, e) = (win.start() - 1, win.end());
            let split = nu - 1;
            if e < s + 2 || split <= s || split >= e {
                return Ok((nu, true));
            }
            let mut b = vec![0.0; pw.pairs];
            pw.cusum_into(s, split, e, &mut b);
            let scale = cusum_scale(s, split, e);
            let theta = usvt(&upper_to_dense(a.nodes(), b), tau2, tau3 * scale)?;
            let template = dense_to_upper(&theta);
            if template.iter().all(|&v| v == 0.0) {
                return Ok((nu, true));
            }
            let mut best = (split, f64::NEG_INFINITY);
            for t in s + 1..e {
                let v = pa.inner_with(s, t, e, &template);
                if v > best.1 {
                    best = (t, v);
                }
            }
            Ok((best.0 + 1, false))
        })
        .collect::<Result<_>>()?;

    let flagged = results
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.1.then_some(k))
        .collect();
    Ok(Refined {
        points: ChangePointSet::from_unsorted(results.into_iter().map(|r| r.0).collect()),
        flagged,
    })
}
