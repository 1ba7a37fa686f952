//! Scenario specifications and their key-value file format.
//!
//! ```text
//! model = mean
//! length = 100
//! change_points = 51
//! sigma = 0
//! seed = 7
//! means = 0, 5
//! ```
//!
//! Model-specific keys:
//!
//! | model        | keys |
//! |--------------|------|
//! | `mean`       | `means = m1, m2, ..` |
//! | `poly`       | `coefficients = c0, c1, ..; c0, c1, ..` (one group per segment, in powers of `t/T`) |
//! | `covariance` | `dim`, `thetas = th1, th2, ..`, optional `direction = v1, .., vp` (default: normalised ones) |
//! | `network`    | `nodes`, `blocks`, `probabilities = b11, b12, .., bkk; ..` (row-major, one group per segment) |
//! | `ks`         | `distributions = normal(0, 1); uniform(-1, 1); point(2); ..` |
//! | `density`    | `dim`, `means = m1.., ; m2..` (isotropic Gaussians with standard deviation `sigma`) |
//! | `kernel`     | `distributions` as for `ks`, `gamma` |

use std::fmt;
use std::str::FromStr;

use cpkit_core::ChangePointSet;

use crate::config::{join, parse_entries, Entry};
use crate::error::{Error, Result};
use crate::jump;

/// The seven model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    Mean,
    Poly,
    Covariance,
    Network,
    Ks,
    Density,
    Kernel,
}

impl Model {
    pub const ALL: [Model; 7] = [
        Model::Mean,
        Model::Poly,
        Model::Covariance,
        Model::Network,
        Model::Ks,
        Model::Density,
        Model::Kernel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::Mean => "mean",
            Model::Poly => "poly",
            Model::Covariance => "covariance",
            Model::Network => "network",
            Model::Ks => "ks",
            Model::Density => "density",
            Model::Kernel => "kernel",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown model `{s}` (expected one of {})",
                    Model::ALL.map(Model::name).join(", ")
                ))
            })
    }
}

/// Univariate segment distributions for the KS and kernel families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarDist {
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    /// A point mass, the noiseless member of the family.
    Point { value: f64 },
}

impl ScalarDist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScalarDist::Normal { mean, sd } if mean.is_finite() && sd > 0.0 && sd.is_finite() => {
                Ok(())
            }
            ScalarDist::Uniform { low, high } if low.is_finite() && high.is_finite() && low < high => {
                Ok(())
            }
            ScalarDist::Point { value } if value.is_finite() => Ok(()),
            _ => Err(Error::invalid(format!("invalid distribution {self}"))),
        }
    }
}

impl fmt::Display for ScalarDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarDist::Normal { mean, sd } => write!(f, "normal({mean}, {sd})"),
            ScalarDist::Uniform { low, high } => write!(f, "uniform({low}, {high})"),
            ScalarDist::Point { value } => write!(f, "point({value})"),
        }
    }
}

impl FromStr for ScalarDist {
    type Err = Error;

    /// Parses `normal(mean, sd)`, `uniform(low, high)` or `point(value)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::invalid(format!(
                "expected `normal(m, sd)`, `uniform(a, b)` or `point(v)`, got `{s}`"
            ))
        };
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        let args = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let d = match (s[..open].trim(), nums.as_slice()) {
            ("normal", &[mean, sd]) => ScalarDist::Normal { mean, sd },
            ("uniform", &[low, high]) => ScalarDist::Uniform { low, high },
            ("point", &[value]) => ScalarDist::Point { value },
            _ => return Err(bad()),
        };
        d.validate()?;
        Ok(d)
    }
}

/// Per-segment parameters; each vector has one entry per segment.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentParams {
    /// Segment means.
    Mean { means: Vec<f64> },
    /// Coefficients of `sum_l c_l (t/T)^l`, all of the same length `r + 1`.
    Poly { coefficients: Vec<Vec<f64>> },
    /// Covariance `sigma^2 (I + theta v v^T)` with a shared unit direction `v`.
    Covariance {
        dim: usize,
        direction: Vec<f64>,
        thetas: Vec<f64>,
    },
    /// Block model on `nodes` nodes split into `blocks` contiguous groups of
    /// near-equal size; one row-major `blocks x blocks` probability matrix per
    /// segment.
    Network {
        nodes: usize,
        blocks: usize,
        probabilities: Vec<Vec<f64>>,
    },
    Ks { distributions: Vec<ScalarDist> },
    /// Isotropic Gaussian densities with standard deviation `sigma`.
    Density { dim: usize, means: Vec<Vec<f64>> },
    /// Scalar distributions observed through an rbf kernel with parameter
    /// `gamma`, which defines the jump size.
    Kernel {
        distributions: Vec<ScalarDist>,
        gamma: f64,
    },
}

impl SegmentParams {
    pub fn model(&self) -> Model {
        match self {
            SegmentParams::Mean { .. } => Model::Mean,
            SegmentParams::Poly { .. } => Model::Poly,
            SegmentParams::Covariance { .. } => Model::Covariance,
            SegmentParams::Network { .. } => Model::Network,
            SegmentParams::Ks { .. } => Model::Ks,
            SegmentParams::Density { .. } => Model::Density,
            SegmentParams::Kernel { .. } => Model::Kernel,
        }
    }

    pub fn segment_count(&self) -> usize {
        match self {
            SegmentParams::Mean { means } => means.len(),
            SegmentParams::Poly { coefficients } => coefficients.len(),
            SegmentParams::Covariance { thetas, .. } => thetas.len(),
            SegmentParams::Network { probabilities, .. } => probabilities.len(),
            SegmentParams::Ks { distributions } => distributions.len(),
            SegmentParams::Density { means, .. } => means.len(),
            SegmentParams::Kernel { distributions, .. } => distributions.len(),
        }
    }
}

/// A fully specified synthetic scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub len: usize,
    /// First indices of new segments, strictly increasing in `2..=len`.
    pub change_points: Vec<usize>,
    pub params: SegmentParams,
    /// Noise scale: the Gaussian noise standard deviation for `mean` and
    /// `poly`, the covariance scale for `covariance` and the density
    /// standard deviation for `density`. Unused by the other families.
    pub sigma: f64,
    pub seed: u64,
}

/// Ground truth attached to a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub change_points: ChangePointSet,
    /// Jump size of each change in the family's norm. For networks this is
    /// the Frobenius gap divided by `n * rho`.
    pub jumps: Vec<f64>,
    /// Minimal jump size; `0` without change points.
    pub kappa: f64,
    /// Minimal spacing `Delta` between `1, eta_1, .., eta_K, T + 1`.
    pub spacing: usize,
    /// Network sparsity `rho`, the largest edge probability.
    pub sparsity: Option<f64>,
}

impl ScenarioSpec {
    pub fn model(&self) -> Model {
        self.params.model()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// Validates the scenario and computes its ground truth.
    pub fn truth(&self) -> Result<Truth> {
        if self.len < 2 {
            return Err(Error::invalid(format!("length {} < 2", self.len)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        let cps = ChangePointSet::new(self.change_points.clone(), self.len)?;
        let segments = self.params.segment_count();
        if segments != cps.len() + 1 {
            return Err(Error::invalid(format!(
                "{} change points need {} segments of parameters, got {segments}",
                cps.len(),
                cps.len() + 1
            )));
        }
        let (jumps, sparsity) = jump::jump_sizes(self)?;
        if let Some(k) = jumps.iter().position(|&j| !(j > 0.0)) {
            return Err(Error::invalid(format!(
                "segments {} and {} do not differ (jump size {})",
                k + 1,
                k + 2,
                jumps[k]
            )));
        }
        let kappa = jumps.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Truth {
            spacing: cps.min_spacing(self.len),
            change_points: cps,
            kappa: if jumps.is_empty() { 0.0 } else { kappa },
            jumps,
            sparsity,
        })
    }

    /// Serialises to the key-value format described in the module docs.
    pub fn to_config_string(&self) -> String {
        let mut out = String::from("# cpkit scenario\n");
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("model", self.model().to_string());
        kv("length", self.len.to_string());
        kv("change_points", join(&self.change_points, ", "));
        kv("sigma", self.sigma.to_string());
        kv("seed", self.seed.to_string());
        let groups = |g: &[Vec<f64>]| g.iter().map(|v| join(v, ", ")).collect::<Vec<_>>().join("; ");
        match &self.params {
            SegmentParams::Mean { means } => kv("means", join(means, ", ")),
            SegmentParams::Poly { coefficients } => kv("coefficients", groups(coefficients)),
            SegmentParams::Covariance {
                dim,
                direction,
                thetas,
            } => {
                kv("dim", dim.to_string());
                kv("direction", join(direction, ", "));
                kv("thetas", join(thetas, ", "));
            }
            SegmentParams::Network {
                nodes,
                blocks,
                probabilities,
            } => {
                kv("nodes", nodes.to_string());
                kv("blocks", blocks.to_string());
                kv("probabilities", groups(probabilities));
            }
            SegmentParams::Ks { distributions } => kv("distributions", join(distributions, "; ")),
            SegmentParams::Density { dim, means } => {
                kv("dim", dim.to_string());
                kv("means", groups(means));
            }
            SegmentParams::Kernel {
                distributions,
                gamma,
            } => {
                kv("distributions", join(distributions, "; "));
                kv("gamma", gamma.to_string());
            }
        }
        out
    }

    /// Parses and validates a scenario file.
    pub fn from_config_str(text: &str) -> Result<Self> {
        Self::from_entries(parse_entries(text)?)
    }

    /// Builds a scenario from parsed entries; every entry must be a scenario
    /// key.
    pub fn from_entries(entries: Vec<Entry>) -> Result<Self> {
        let mut fields = Fields(entries);
        let model: Model = {
            let e = fields.take_required("model")?;
            e.value.parse().map_err(|err: Error| Error::parse(e.line, err.to_string()))?
        };
        let len = fields.take_required("length")?.parse()?;
        let change_points = match fields.take("change_points") {
            Some(e) => e.list()?,
            None => Vec::new(),
        };
        let sigma = match fields.take("sigma") {
            Some(e) => e.parse()?,
            None => 1.0,
        };
        let seed = match fields.take("seed") {
            Some(e) => e.parse()?,
            None => 0,
        };
        let params = match model {
            Model::Mean => SegmentParams::Mean {
                means: fields.take_required("means")?.list()?,
            },
            Model::Poly => SegmentParams::Poly {
                coefficients: fields.take_required("coefficients")?.groups()?,
            },
            Model::Covariance => {
                let dim: usize = fields.take_required("dim")?.parse()?;
                let direction = match fields.take("direction") {
                    Some(e) => e.list()?,
                    None => vec![1.0; dim],
                };
                SegmentParams::Covariance {
                    dim,
                    direction,
                    thetas: fields.take_required("thetas")?.list()?,
                }
            }
            Model::Network => SegmentParams::Network {
                nodes: fields.take_required("nodes")?.parse()?,
                blocks: fields.take_required("blocks")?.parse()?,
                probabilities: fields.take_required("probabilities")?.groups()?,
            },
            Model::Ks => SegmentParams::Ks {
                distributions: dist_list(&fields.take_required("distributions")?)?,
            },
            Model::Density => SegmentParams::Density {
                dim: fields.take_required("dim")?.parse()?,
                means: fields.take_required("means")?.groups()?,
            },
            Model::Kernel => SegmentParams::Kernel {
                distributions: dist_list(&fields.take_required("distributions")?)?,
                gamma: fields.take_required("gamma")?.parse()?,
            },
        };
        fields.finish()?;
        let spec = ScenarioSpec {
            len,
            change_points,
            params,
            sigma,
            seed,
        };
        spec.truth()?;
        Ok(spec)
    }
}

fn dist_list(e: &Entry) -> Result<Vec<ScalarDist>> {
    e.value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|err: Error| Error::parse(e.line, err.to_string())))
        .collect()
}

struct Fields(Vec<Entry>);

impl Fields {
    fn take(&mut self, key: &str) -> Option<Entry> {
        let i = self.0.iter().position(|e| e.key == key)?;
        Some(self.0.remove(i))
    }

    fn take_required(&mut self, key: &str) -> Result<Entry> {
        self.take(key)
            .ok_or_else(|| Error::parse(0, format!("missing required key `{key}`")))
    }

    fn finish(self) -> Result<()> {
        match self.0.first() {
            Some(e) => Err(Error::parse(e.line, format!("unknown key `{}`", e.key))),
            None => Ok(()),
        }
    }
}
