//! Jump sizes of each model family, with parameter validation.

use nalgebra::DMatrix;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::scenario::{ScalarDist, ScenarioSpec, SegmentParams};

/// Relative tolerance under which two recentred polynomial coefficients are
/// treated as equal.
pub const POLY_COEF_TOL: f64 = 1e-9;

/// Number of grid steps used for the KS and density jump sizes.
pub const GRID_STEPS: usize = 10_000;

const QUADRATURE_STEPS: usize = 20_000;

/// Jump sizes per change and, for networks, the sparsity.
pub(crate) fn jump_sizes(spec: &ScenarioSpec) -> Result<(Vec<f64>, Option<f64>)> {
    let pairs = |n: usize| 0..n.saturating_sub(1);
    Ok(match &spec.params {
        SegmentParams::Mean { means } => {
            finite(means, "means")?;
            (pairs(means.len()).map(|k| (means[k + 1] - means[k]).abs()).collect(), None)
        }
        SegmentParams::Poly { coefficients } => {
            let order = coefficients.first().map_or(0, Vec::len);
            if order == 0 || coefficients.iter().any(|c| c.len() != order) {
                return Err(Error::invalid(
                    "polynomial coefficients must be non-empty and of equal length",
                ));
            }
            for c in coefficients {
                finite(c, "coefficients")?;
            }
            let jumps = pairs(coefficients.len())
                .map(|k| {
                    let s = spec.change_points[k] as f64 / spec.len as f64;
                    poly_jump(&coefficients[k], &coefficients[k + 1], s)
                })
                .collect();
            (jumps, None)
        }
        SegmentParams::Covariance {
            dim,
            direction,
            thetas,
        } => {
            if *dim == 0 || direction.len() != *dim {
                return Err(Error::invalid(format!(
                    "direction has {} entries for dimension {dim}",
                    direction.len()
                )));
            }
            finite(direction, "direction")?;
            if direction.iter().all(|&v| v == 0.0) {
                return Err(Error::invalid("direction must be nonzero"));
            }
            finite(thetas, "thetas")?;
            if let Some(t) = thetas.iter().find(|&&t| t <= -1.0) {
                return Err(Error::invalid(format!("theta {t} <= -1 gives a singular covariance")));
            }
            let s2 = spec.sigma * spec.sigma;
            let jumps: Vec<f64> = pairs(thetas.len())
                .map(|k| s2 * (thetas[k + 1] - thetas[k]).abs())
                .collect();
            // The sub-Gaussian scale of the family is the largest covariance
            // operator norm.
            let scale = s2 * thetas.iter().fold(1.0f64, |m, &t| m.max(1.0 + t));
            if let Some(j) = jumps.iter().find(|&&j| j > 4.0 * scale) {
                return Err(Error::invalid(format!("jump {j} exceeds 4 sigma^2 = {}", 4.0 * scale)));
            }
            (jumps, None)
        }
        SegmentParams::Network {
            nodes,
            blocks,
            probabilities,
        } => {
            let (n, k) = (*nodes, *blocks);
            if n < 2 || k == 0 || k > n {
                return Err(Error::invalid(format!("need 2 <= nodes and 1 <= blocks <= nodes, got {n}, {k}")));
            }
            for b in probabilities {
                check_block_matrix(b, k)?;
            }
            let rho = probabilities
                .iter()
                .flatten()
                .fold(0.0f64, |m, &p| m.max(p));
            if (n as f64) * rho < (n as f64).ln() {
                return Err(Error::invalid(format!(
                    "n * rho = {} is below log n = {}",
                    n as f64 * rho,
                    (n as f64).ln()
                )));
            }
            let sizes = block_sizes(n, k);
            let jumps = pairs(probabilities.len())
                .map(|s| {
                    let (a, b) = (&probabilities[s], &probabilities[s + 1]);
                    let mut sq = 0.0;
                    for i in 0..k {
                        for j in 0..k {
                            let d = b[i * k + j] - a[i * k + j];
                            let count = if i == j {
                                sizes[i] * (sizes[i] - 1)
                            } else {
                                sizes[i] * sizes[j]
                            };
                            sq += count as f64 * d * d;
                        }
                    }
                    sq.sqrt() / (n as f64 * rho)
                })
                .collect();
            (jumps, Some(rho))
        }
        SegmentParams::Ks { distributions } => {
            for d in distributions {
                d.validate()?;
            }
            (pairs(distributions.len()).map(|k| ks_distance(&distributions[k], &distributions[k + 1])).collect(), None)
        }
        SegmentParams::Density { dim, means } => {
            if *dim == 0 || means.iter().any(|m| m.len() != *dim) {
                return Err(Error::invalid(format!("density means must have {dim} > 0 coordinates")));
            }
            for m in means {
                finite(m, "means")?;
            }
            if !(spec.sigma > 0.0) {
                return Err(Error::invalid("density scenarios need sigma > 0"));
            }
            (
                pairs(means.len())
                    .map(|k| gaussian_sup_distance(&means[k], &means[k + 1], spec.sigma))
                    .collect(),
                None,
            )
        }
        SegmentParams::Kernel {
            distributions,
            gamma,
        } => {
            if !(*gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
            }
            for d in distributions {
                d.validate()?;
            }
            (
                pairs(distributions.len())
                    .map(|k| rbf_mmd(&distributions[k], &distributions[k + 1], *gamma))
                    .collect(),
                None,
            )
        }
    })
}

fn finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be finite")))
    }
}

fn check_block_matrix(b: &[f64], k: usize) -> Result<()> {
    if b.len() != k * k {
        return Err(Error::invalid(format!("block matrix has {} entries, expected {}", b.len(), k * k)));
    }
    for i in 0..k {
        for j in 0..k {
            let p = b[i * k + j];
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
            }
            if p != b[j * k + i] {
                return Err(Error::invalid("block probability matrix must be symmetric"));
            }
        }
    }
    Ok(())
}

/// Sizes of the `k` contiguous blocks; node `i` (0-based) is in block
/// `i * k / n`.
pub(crate) fn block_sizes(n: usize, k: usize) -> Vec<usize> {
    let mut sizes = vec![0; k];
    for i in 0..n {
        sizes[i * k / n] += 1;
    }
    sizes
}

/// Edge-probability matrix of a block model with zero diagonal.
pub fn block_graphon(nodes: usize, blocks: usize, probabilities: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(nodes, nodes, |i, j| {
        if i == j {
            0.0
        } else {
            probabilities[(i * blocks / nodes) * blocks + j * blocks / nodes]
        }
    })
}

/// Recentres `sum_l c_l x^l` at `s`: the coefficients of `sum_l a_l (x - s)^l`.
pub fn recentre(c: &[f64], s: f64) -> Vec<f64> {
    (0..c.len())
        .map(|l| {
            let mut binom = 1.0;
            let mut pow = 1.0;
            let mut acc = 0.0;
            for m in l..c.len() {
                if m > l {
                    binom = binom * m as f64 / (m - l) as f64;
                    pow *= s;
                }
                acc += c[m] * binom * pow;
            }
            acc
        })
        .collect()
}

/// Gap in the lowest-order recentred coefficient that differs.
pub fn poly_jump(before: &[f64], after: &[f64], s: f64) -> f64 {
    let a = recentre(before, s);
    let b = recentre(after, s);
    a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs())
        .zip(a.iter().zip(&b))
        .find(|(d, (x, y))| *d > POLY_COEF_TOL * 1f64.max(x.abs()).max(y.abs()))
        .map_or(0.0, |(d, _)| d)
}

impl ScalarDist {
    pub fn cdf(&self, z: f64) -> f64 {
        match *self {
            ScalarDist::Normal { mean, sd } => Normal::new(mean, sd).expect("validated").cdf(z),
            ScalarDist::Uniform { low, high } => ((z - low) / (high - low)).clamp(0.0, 1.0),
            ScalarDist::Point { value } => f64::from(u8::from(z >= value)),
        }
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            ScalarDist::Normal { mean, sd } => (mean - 10.0 * sd, mean + 10.0 * sd),
            ScalarDist::Uniform { low, high } => (low, high),
            ScalarDist::Point { value } => (value, value),
        }
    }
}

/// `sup_z |F(z) - G(z)|` on a grid of [`GRID_STEPS`] steps over the joint
/// support, plus the atoms and endpoints of either distribution.
pub fn ks_distance(f: &ScalarDist, g: &ScalarDist) -> f64 {
    let (a0, a1) = f.support();
    let (b0, b1) = g.support();
    let (lo, hi) = (a0.min(b0), a1.max(b1));
    let step = (hi - lo) / GRID_STEPS as f64;
    (0..=GRID_STEPS)
        .map(|i| {
            let z = lo + i as f64 * step;
            (f.cdf(z) - g.cdf(z)).abs()
        })
        .chain(
            // Point masses jump at their value and uniform CDFs kink at their
            // endpoints; both are evaluated exactly.
            [f, g]
                .into_iter()
                .flat_map(|d| match *d {
                    ScalarDist::Point { value } => vec![value],
                    ScalarDist::Uniform { low, high } => vec![low, high],
                    ScalarDist::Normal { .. } => vec![],
                })
                .map(|z| (f.cdf(z) - g.cdf(z)).abs()),
        )
        .fold(0.0, f64::max)
}

/// `sup_x |phi(x - a) - phi(x - b)|` for isotropic Gaussians with standard
/// deviation `sd`. The supremum lies on the line through `a` and `b`, which
/// is gridded with [`GRID_STEPS`] steps over `[-8 sd, |a - b| + 8 sd]`.
pub fn gaussian_sup_distance(a: &[f64], b: &[f64], sd: f64) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    if d == 0.0 {
        return 0.0;
    }
    let p = a.len() as i32;
    let unit = Normal::new(0.0, sd).expect("sd > 0");
    // The density of an isotropic Gaussian at distance u from its mean is
    // phi_1(u) times phi_1(0)^(p-1).
    let scale = unit.pdf(0.0).powi(p - 1);
    let (lo, hi) = (-8.0 * sd, d + 8.0 * sd);
    let step = (hi - lo) / GRID_STEPS as f64;
    (0..=GRID_STEPS)
        .map(|i| {
            let u = lo + i as f64 * step;
            scale * (unit.pdf(u) - unit.pdf(u - d)).abs()
        })
        .fold(0.0, f64::max)
}

/// `E exp(-gamma (x - Y)^2)` for `Y ~ q`.
fn smoothed(x: f64, q: &ScalarDist, gamma: f64) -> f64 {
    match *q {
        ScalarDist::Normal { mean, sd } => {
            let v = 1.0 + 2.0 * gamma * sd * sd;
            (-gamma * (x - mean) * (x - mean) / v).exp() / v.sqrt()
        }
        ScalarDist::Uniform { low, high } => {
            let r = gamma.sqrt();
            (std::f64::consts::PI / (4.0 * gamma)).sqrt() * (erf(r * (high - x)) - erf(r * (low - x)))
                / (high - low)
        }
        ScalarDist::Point { value } => (-gamma * (x - value) * (x - value)).exp(),
    }
}

/// `E exp(-gamma (X - Y)^2)` for independent `X ~ p`, `Y ~ q`. Closed form
/// when both are normal or one is a point mass; otherwise Simpson quadrature
/// over a uniform factor.
fn rbf_expectation(p: &ScalarDist, q: &ScalarDist, gamma: f64) -> f64 {
    match (*p, *q) {
        (ScalarDist::Point { value }, other) | (other, ScalarDist::Point { value }) => {
            smoothed(value, &other, gamma)
        }
        (ScalarDist::Normal { mean: m1, sd: s1 }, ScalarDist::Normal { mean: m2, sd: s2 }) => {
            let v = 1.0 + 2.0 * gamma * (s1 * s1 + s2 * s2);
            (-gamma * (m1 - m2) * (m1 - m2) / v).exp() / v.sqrt()
        }
        (ScalarDist::Uniform { low, high }, other) | (other, ScalarDist::Uniform { low, high }) => {
            let n = QUADRATURE_STEPS;
            let h = (high - low) / n as f64;
            let mut acc = 0.0;
            for i in 0..=n {
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * smoothed(low + i as f64 * h, &other, gamma);
            }
            acc * h / 3.0 / (high - low)
        }
    }
}

/// RKHS distance between the kernel mean embeddings of `p` and `q` under
/// `exp(-gamma |x - y|^2)`.
pub fn rbf_mmd(p: &ScalarDist, q: &ScalarDist, gamma: f64) -> f64 {
    let sq = rbf_expectation(p, p, gamma) + rbf_expectation(q, q, gamma)
        - 2.0 * rbf_expectation(p, q, gamma);
    sq.max(0.0).sqrt()
}
