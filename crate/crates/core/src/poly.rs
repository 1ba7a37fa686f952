//! Piecewise polynomial signals: order-`r` projection cost, penalised
//! detection, local refinement and the two-interval cross term.
//!
//! Time points enter on the `t / T` scale. Fits are computed per interval in
//! the shifted and scaled variable `u = (t - c) / h`, with `c` the interval
//! midpoint and `h` its half-width. This spans the same polynomial space as
//! the `t / T` monomials, so residuals and projections are unchanged, while
//! the Gram matrix stays well conditioned.

use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::engine::{refinement_windows, solve_min_partition, Refined, SegmentCost};
use crate::error::{Error, Result};
use crate::linalg::solve_spd;
use crate::mean::MeanSeries;
use crate::types::{ChangePointSet, Interval};

/// The `|I| x (r + 1)` monomial design matrix with rows
/// `(1, t/T, .., (t/T)^r)` for `t` in `I`.
pub fn design_matrix(interval: Interval, r: usize, len: usize) -> Result<DMatrix<f64>> {
    interval.check_within(len)?;
    let n = interval.len();
    Ok(DMatrix::from_fn(n, r + 1, |i, j| {
        ((interval.start() + i) as f64 / len as f64).powi(j as i32)
    }))
}

/// Least-squares fit on the rows `lo..=hi` (1-based) in the basis
/// `u = (t - centre) / half_width`.
struct Fit {
    gram: DMatrix<f64>,
    coef: DVector<f64>,
    ridged: bool,
}

#[derive(Clone, Copy)]
struct Basis {
    centre: f64,
    half_width: f64,
}

impl Basis {
    fn over(lo: usize, hi: usize) -> Self {
        Self {
            centre: 0.5 * (lo + hi) as f64,
            half_width: (0.5 * (hi - lo) as f64).max(1.0),
        }
    }

    #[inline]
    fn u(&self, t: usize) -> f64 {
        (t as f64 - self.centre) / self.half_width
    }
}

fn powers(u: f64, r: usize, out: &mut [f64]) {
    let mut p = 1.0;
    for slot in out.iter_mut().take(r + 1) {
        *slot = p;
        p *= u;
    }
}

fn fit(x: &[f64], lo: usize, hi: usize, r: usize, basis: Basis) -> Result<Fit> {
    let k = r + 1;
    let mut gram = DMatrix::zeros(k, k);
    let mut rhs = DMatrix::zeros(k, 1);
    let mut pw = vec![0.0; k];
    for t in lo..=hi {
        powers(basis.u(t), r, &mut pw);
        let y = x[t - 1];
        for a in 0..k {
            rhs[(a, 0)] += pw[a] * y;
            for b in a..k {
                gram[(a, b)] += pw[a] * pw[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    let solved = solve_spd(&gram, &rhs)?;
    Ok(Fit {
        coef: solved.solution.column(0).into_owned(),
        gram,
        ridged: solved.ridged,
    })
}

fn residual(x: &[f64], lo: usize, hi: usize, r: usize, basis: Basis, coef: &DVector<f64>) -> f64 {
    let mut pw = vec![0.0; r + 1];
    let mut acc = 0.0;
    for t in lo..=hi {
        powers(basis.u(t), r, &mut pw);
        let fitted: f64 = pw.iter().zip(coef.iter()).map(|(p, c)| p * c).sum();
        let d = x[t - 1] - fitted;
        acc += d * d;
    }
    acc
}

/// Residual sum of squares of the order-`r` fit on `interval`, together with
/// whether the fit needed a ridge.
pub fn poly_fit_residual(x: &MeanSeries, interval: Interval, r: usize) -> Result<(f64, bool)> {
    interval.check_within(x.len())?;
    if interval.len() <= r + 1 {
        return Ok((0.0, false));
    }
    let (lo, hi) = (interval.start(), interval.end());
    let basis = Basis::over(lo, hi);
    let f = fit(x.values(), lo, hi, r, basis)?;
    Ok((residual(x.values(), lo, hi, r, basis, &f.coef), f.ridged))
}

/// Squared residual of the order-`r` least-squares polynomial on `interval`;
/// zero when `|I| <= r + 1`, where the fit interpolates.
pub fn poly_cost(x: &MeanSeries, interval: Interval, r: usize) -> f64 {
    poly_fit_residual(x, interval, r).map_or(f64::NAN, |(c, _)| c)
}

/// [`poly_cost`] as a [`SegmentCost`], remembering whether any fit was
/// ill-conditioned.
#[derive(Debug)]
pub struct PolyCost<'a> {
    x: &'a MeanSeries,
    r: usize,
    ridged: AtomicBool,
}

impl<'a> PolyCost<'a> {
    pub fn new(x: &'a MeanSeries, r: usize) -> Self {
        Self {
            x,
            r,
            ridged: AtomicBool::new(false),
        }
    }

    /// Whether some interval's Gram matrix needed the ridge fallback.
    pub fn conditioning_warning(&self) -> bool {
        self.ridged.load(Ordering::Relaxed)
    }
}

impl SegmentCost for PolyCost<'_> {
    fn cost(&self, interval: Interval) -> f64 {
        match poly_fit_residual(self.x, interval, self.r) {
            Ok((c, ridged)) => {
                if ridged {
                    self.ridged.store(true, Ordering::Relaxed);
                }
                c
            }
            Err(_) => f64::NAN,
        }
    }
}

/// Noise scale from order-`r + 1` differences, which annihilate a degree-`r`
/// trend: `median |D^{r+1} x| / (sqrt(C(2r+2, r+1)) * 0.6745)`, floored as in
/// [`crate::mean::tuning_noise_scale`].
pub fn poly_noise_scale(x: &MeanSeries, r: usize) -> f64 {
    let mut d = x.values().to_vec();
    for _ in 0..=r {
        if d.len() < 2 {
            break;
        }
        d = d.windows(2).map(|w| w[1] - w[0]).collect();
    }
    let m = r + 1;
    let var_factor: f64 = (1..=m).map(|i| (m + i) as f64 / i as f64).product();
    let mut abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let sigma = if abs.is_empty() {
        0.0
    } else {
        crate::engine::median(&mut abs) / (var_factor.sqrt() * 0.6745)
    };
    let peak = x.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    sigma.max(1e-5 * peak)
}

/// Default PDP penalty `2 (r + 1) sigma^2 log T` with `sigma` from
/// [`poly_noise_scale`].
pub fn default_lambda(x: &MeanSeries, r: usize) -> f64 {
    let sigma = poly_noise_scale(x, r);
    crate::mean::LAMBDA_CONSTANT * (r + 1) as f64 * sigma * sigma * (x.len() as f64).ln()
}

/// Penalised piecewise-polynomial segmentation.
pub fn detect_poly_pdp(x: &MeanSeries, r: usize, lambda: f64) -> Result<ChangePointSet> {
    Ok(solve_min_partition(x.len(), &PolyCost::new(x, r), lambda)?.change_points)
}

/// Moves each initial estimate to the split minimising the two-sided
/// polynomial residual inside its refinement window.
pub fn refine_poly(x: &MeanSeries, r: usize, initial: &ChangePointSet) -> Result<Refined> {
    if initial.is_empty() {
        return Err(Error::invalid("refinement needs at least one initial change point"));
    }
    ChangePointSet::new(initial.as_slice().to_vec(), x.len())?;
    let windows = refinement_windows(initial, x.len());
    let mut points = Vec::with_capacity(windows.len());
    let mut flagged = Vec::new();
    for (k, w) in windows.iter().enumerate() {
        if w.len() < 2 {
            points.push(initial.as_slice()[k]);
            flagged.push(k);
            continue;
        }
        let mut best = (initial.as_slice()[k], f64::INFINITY);
        for c in w.start() + 1..=w.end() {
            let left = poly_fit_residual(x, Interval::new_unchecked(w.start(), c - 1), r)?.0;
            let right = poly_fit_residual(x, Interval::new_unchecked(c, w.end()), r)?.0;
            let v = left + right;
            if v < best.1 {
                best = (c, v);
            }
        }
        points.push(best.0);
    }
    Ok(Refined {
        points: ChangePointSet::from_unsorted(points),
        flagged,
    })
}

/// Cross term `Q(I1, I2)` in the decomposition
/// `cost(I1 u I2) = cost(I1) + cost(I2) + Q`:
/// `(b1 - b2)' (G1^-1 + G2^-1)^-1 (b1 - b2)` with `b_i`, `G_i` the fitted
/// coefficients and Gram matrix of each piece in a common basis.
pub fn cross_term(x: &MeanSeries, i1: Interval, i2: Interval, r: usize) -> Result<f64> {
    i1.check_within(x.len())?;
    i2.check_within(x.len())?;
    let (first, second) = if i1.start() < i2.start() { (i1, i2) } else { (i2, i1) };
    if first.end() + 1 != second.start() {
        return Err(Error::invalid(format!(
            "intervals {i1} and {i2} must be disjoint and adjacent"
        )));
    }
    let basis = Basis::over(first.start(), second.end());
    let f1 = fit(x.values(), i1.start(), i1.end(), r, basis)?;
    let f2 = fit(x.values(), i2.start(), i2.end(), r, basis)?;
    let inv = |g: &DMatrix<f64>| {
        solve_spd(g, &DMatrix::identity(r + 1, r + 1)).map(|s| s.solution)
    };
    let middle = inv(&f1.gram)? + inv(&f2.gram)?;
    let diff = DMatrix::from_column_slice(r + 1, 1, (&f1.coef - &f2.coef).as_slice());
    let w = solve_spd(&middle, &diff)?.solution;
    Ok((diff.transpose() * w)[(0, 0)])
}
