//! Seeded data generation.

use cpkit_core::series::{AdjacencySeries, VectorSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::jump::block_graphon;
use crate::scenario::{ScalarDist, ScenarioSpec, SegmentParams, Truth};

/// Observations of any model family.
#[derive(Debug, Clone, PartialEq)]
pub enum Observations {
    Scalar(Vec<f64>),
    Vector(VectorSeries),
    Network(AdjacencySeries),
}

impl Observations {
    pub fn len(&self) -> usize {
        match self {
            Observations::Scalar(x) => x.len(),
            Observations::Vector(x) => x.len(),
            Observations::Network(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A generated series with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub observations: Observations,
    pub truth: Truth,
}

/// Draws one dataset. Noise is Gaussian; with `sigma = 0` the mean and
/// polynomial families return their exact signal.
pub fn generate(spec: &ScenarioSpec) -> Result<Dataset> {
    let truth = spec.truth()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.len;
    let segment_of: Vec<usize> = {
        let mut out = Vec::with_capacity(n);
        let mut k = 0;
        for t in 1..=n {
            while k < spec.change_points.len() && t >= spec.change_points[k] {
                k += 1;
            }
            out.push(k);
        }
        out
    };
    let sigma = spec.sigma;
    let observations = match &spec.params {
        SegmentParams::Mean { means } => Observations::Scalar(
            segment_of
                .iter()
                .map(|&k| means[k] + sigma * gauss(&mut rng))
                .collect(),
        ),
        SegmentParams::Poly { coefficients } => Observations::Scalar(
            segment_of
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    let x = (i + 1) as f64 / n as f64;
                    let f = coefficients[k].iter().rev().fold(0.0, |acc, c| acc * x + c);
                    f + sigma * gauss(&mut rng)
                })
                .collect(),
        ),
        SegmentParams::Covariance {
            dim,
            direction,
            thetas,
        } => {
            let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            let v: Vec<f64> = direction.iter().map(|d| d / norm).collect();
            let mut data = Vec::with_capacity(n * dim);
            for &k in &segment_of {
                // sigma (z + (sqrt(1 + theta) - 1) (v . z) v) has covariance
                // sigma^2 (I + theta v v^T).
                let z: Vec<f64> = (0..*dim).map(|_| gauss(&mut rng)).collect();
                let proj: f64 = z.iter().zip(&v).map(|(a, b)| a * b).sum();
                let c = (1.0 + thetas[k]).sqrt() - 1.0;
                data.extend(z.iter().zip(&v).map(|(zi, vi)| sigma * (zi + c * proj * vi)));
            }
            Observations::Vector(VectorSeries::from_flat(data, *dim)?)
        }
        SegmentParams::Network {
            nodes,
            blocks,
            probabilities,
        } => {
            let graphons: Vec<_> = probabilities
                .iter()
                .map(|b| block_graphon(*nodes, *blocks, b))
                .collect();
            let pairs = AdjacencySeries::pair_count(*nodes);
            let snapshots = segment_of
                .iter()
                .map(|&k| {
                    let g = &graphons[k];
                    let mut upper = Vec::with_capacity(pairs);
                    for i in 0..*nodes {
                        for j in i + 1..*nodes {
                            upper.push(u8::from(rng.random::<f64>() < g[(i, j)]));
                        }
                    }
                    upper
                })
                .collect();
            Observations::Network(AdjacencySeries::from_upper(*nodes, snapshots)?)
        }
        SegmentParams::Ks { distributions }
        | SegmentParams::Kernel { distributions, .. } => Observations::Scalar(
            segment_of
                .iter()
                .map(|&k| draw(&distributions[k], &mut rng))
                .collect(),
        ),
        SegmentParams::Density { dim, means } => {
            let mut data = Vec::with_capacity(n * dim);
            for &k in &segment_of {
                data.extend(means[k].iter().map(|m| m + sigma * gauss(&mut rng)));
            }
            Observations::Vector(VectorSeries::from_flat(data, *dim)?)
        }
    };
    Ok(Dataset {
        observations,
        truth,
    })
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn draw(d: &ScalarDist, rng: &mut ChaCha8Rng) -> f64 {
    match *d {
        ScalarDist::Normal { mean, sd } => mean + sd * gauss(rng),
        ScalarDist::Uniform { low, high } => rng.random_range(low..high),
        ScalarDist::Point { value } => value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::SegmentParams;

    fn mean_spec(sigma: f64, len: usize, cps: Vec<usize>, means: Vec<f64>) -> ScenarioSpec {
        ScenarioSpec {
            len,
            change_points: cps,
            params: SegmentParams::Mean { means },
            sigma,
            seed: 11,
        }
    }

    #[test]
    fn noiseless_mean_is_exact() {
        let d = generate(&mean_spec(0.0, 100, vec![51], vec![0.0, 5.0])).unwrap();
        let Observations::Scalar(x) = d.observations else {
            panic!("scalar expected")
        };
        assert!(x[..50].iter().all(|&v| v == 0.0));
        assert!(x[50..].iter().all(|&v| v == 5.0));
    }

    #[test]
    fn same_seed_same_draw() {
        let s = mean_spec(1.0, 200, vec![101], vec![0.0, 1.0]);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        assert_ne!(generate(&s).unwrap(), generate(&s.with_seed(12)).unwrap());
    }

    #[test]
    fn sample_mean_within_clt_bound() {
        let t = 10_000;
        let d = generate(&mean_spec(1.0, t, vec![], vec![2.5])).unwrap();
        let Observations::Scalar(x) = d.observations else {
            panic!("scalar expected")
        };
        let m = x.iter().sum::<f64>() / t as f64;
        assert!((m - 2.5).abs() < 4.0 / (t as f64).sqrt());
    }

    #[test]
    fn noiseless_poly_evaluates_in_t_over_len() {
        let s = ScenarioSpec {
            len: 10,
            change_points: vec![6],
            params: SegmentParams::Poly {
                coefficients: vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 4.0]],
            },
            sigma: 0.0,
            seed: 0,
        };
        let Observations::Scalar(x) = generate(&s).unwrap().observations else {
            panic!("scalar expected")
        };
        assert_eq!(x[0], 1.0);
        assert!((x[9] - 4.0).abs() < 1e-15);
        assert!((x[5] - 4.0 * 0.36).abs() < 1e-15);
    }

    #[test]
    fn network_snapshots_have_requested_shape() {
        let s = ScenarioSpec {
            len: 20,
            change_points: vec![11],
            params: SegmentParams::Network {
                nodes: 10,
                blocks: 2,
                probabilities: vec![vec![0.5, 0.1, 0.1, 0.5], vec![0.1, 0.5, 0.5, 0.1]],
            },
            sigma: 0.0,
            seed: 3,
        };
        let Observations::Network(a) = generate(&s).unwrap().observations else {
            panic!("network expected")
        };
        assert_eq!((a.nodes(), a.len()), (10, 20));
    }

    #[test]
    fn network_sparsity_floor_enforced() {
        let s = ScenarioSpec {
            len: 20,
            change_points: vec![11],
            params: SegmentParams::Network {
                nodes: 100,
                blocks: 1,
                probabilities: vec![vec![0.01], vec![0.02]],
            },
            sigma: 0.0,
            seed: 3,
        };
        assert!(generate(&s).is_err());
    }

    #[test]
    fn covariance_sample_matches_population() {
        let s = ScenarioSpec {
            len: 20_000,
            change_points: vec![],
            params: SegmentParams::Covariance {
                dim: 3,
                direction: vec![1.0, 1.0, 0.0],
                thetas: vec![2.0],
            },
            sigma: 1.5,
            seed: 9,
        };
        let Observations::Vector(x) = generate(&s).unwrap().observations else {
            panic!("vector expected")
        };
        let mut c = [[0.0; 3]; 3];
        for r in x.rows() {
            for i in 0..3 {
                for j in 0..3 {
                    c[i][j] += r[i] * r[j] / x.len() as f64;
                }
            }
        }
        // sigma^2 (I + 2 v v^T) with v = (1, 1, 0) / sqrt 2.
        let expect = [[4.5, 2.25, 0.0], [2.25, 4.5, 0.0], [0.0, 0.0, 2.25]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((c[i][j] - expect[i][j]).abs() < 0.25, "{i}{j}: {}", c[i][j]);
            }
        }
    }
}
