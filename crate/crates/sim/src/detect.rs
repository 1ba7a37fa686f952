//! One entry point that runs any detector on any model family with default
//! tuning filled in, shared by the sweep harness and the command line.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use cpkit_core::engine::{
    sample_intervals, solve_min_partition, wbs_scan, IdentityTrim, RandomIntervalSet,
};
use cpkit_core::mean::MeanSeries;
use cpkit_core::nonparametric::{KdeScore, KernelFamily, KernelSpec};
use cpkit_core::rkhs::Kernel;
use cpkit_core::series::VectorSeries;
use cpkit_core::{covariance, mean, network, nonparametric, poly, rkhs, ChangePointSet};

use crate::error::{Error, Result};
use crate::generate::Observations;
use crate::scenario::Model;

/// Number of random intervals when none is configured.
pub const DEFAULT_INTERVALS: usize = 100;

/// Polynomial order when none is configured.
pub const DEFAULT_ORDER: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Penalised dynamic programming.
    Pdp,
    /// Wild binary segmentation.
    Wbs,
    /// An initial estimate followed by local refinement.
    Refined,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pdp => "pdp",
            Method::Wbs => "wbs",
            Method::Refined => "refined",
        }
    }

    /// Methods available for a model family.
    pub fn supported(model: Model) -> &'static [Method] {
        match model {
            Model::Mean => &[Method::Pdp, Method::Wbs],
            Model::Poly | Model::Kernel => &[Method::Pdp, Method::Refined],
            Model::Covariance | Model::Ks | Model::Density => &[Method::Wbs],
            Model::Network => &[Method::Wbs, Method::Refined],
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pdp" => Ok(Method::Pdp),
            "wbs" => Ok(Method::Wbs),
            "refined" => Ok(Method::Refined),
            other => Err(Error::invalid(format!(
                "unknown method `{other}` (expected pdp, wbs or refined)"
            ))),
        }
    }
}

/// Optional tuning values; `None` selects the documented default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectorConfig {
    pub lambda: Option<f64>,
    pub tau: Option<f64>,
    pub intervals: Option<usize>,
    pub max_interval_length: Option<usize>,
    pub bandwidth: Option<f64>,
    pub order: Option<usize>,
    /// `linear` or `rbf` for the kernel family; `gaussian`, `epanechnikov`
    /// or `uniform-ball` for the density family.
    pub kernel: Option<String>,
    pub gamma: Option<f64>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub tau3: Option<f64>,
    pub pc_buffer: Option<f64>,
    pub scan_margin: Option<f64>,
}

impl DetectorConfig {
    fn set_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut mark = |set: bool, k| {
            if set {
                keys.push(k)
            }
        };
        mark(self.lambda.is_some(), "lambda");
        mark(self.tau.is_some(), "tau");
        mark(self.intervals.is_some(), "intervals");
        mark(self.max_interval_length.is_some(), "max_interval_length");
        mark(self.bandwidth.is_some(), "bandwidth");
        mark(self.order.is_some(), "order");
        mark(self.kernel.is_some(), "kernel");
        mark(self.gamma.is_some(), "gamma");
        mark(self.tau1.is_some(), "tau1");
        mark(self.tau2.is_some(), "tau2");
        mark(self.tau3.is_some(), "tau3");
        mark(self.pc_buffer.is_some(), "pc_buffer");
        mark(self.scan_margin.is_some(), "scan_margin");
        keys
    }
}

/// Tuning keys accepted by a model and method.
pub fn tuning_keys(model: Model, method: Method) -> &'static [&'static str] {
    const WBS: [&str; 3] = ["tau", "intervals", "max_interval_length"];
    match (model, method) {
        (Model::Mean, Method::Pdp) => &["lambda"],
        (Model::Mean | Model::Ks, Method::Wbs) => &WBS,
        (Model::Poly, _) => &["lambda", "order"],
        (Model::Covariance, _) => &["tau", "intervals", "max_interval_length", "pc_buffer", "scan_margin"],
        (Model::Network, Method::Wbs) => &["tau1", "intervals", "max_interval_length"],
        (Model::Network, _) => &["tau1", "tau2", "tau3", "intervals", "max_interval_length"],
        (Model::Density, _) => &["tau", "intervals", "max_interval_length", "bandwidth", "kernel"],
        (Model::Kernel, _) => &["lambda", "kernel", "gamma"],
        _ => &[],
    }
}

/// A recorded tuning value.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Int(u64),
    Float(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Text(v) => f.write_str(v),
        }
    }
}

/// Detector output with every effective tuning value.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub change_points: ChangePointSet,
    /// The estimate before refinement, for refined methods.
    pub initial: Option<ChangePointSet>,
    /// Indices into `change_points` kept unrefined because their window was
    /// degenerate.
    pub flagged: Vec<usize>,
    pub params: BTreeMap<String, ParamValue>,
    pub warnings: Vec<String>,
}

struct Recorder(BTreeMap<String, ParamValue>);

impl Recorder {
    fn float(&mut self, k: &str, v: f64) -> f64 {
        self.0.insert(k.to_string(), ParamValue::Float(v));
        v
    }

    fn int(&mut self, k: &str, v: usize) -> usize {
        self.0.insert(k.to_string(), ParamValue::Int(v as u64));
        v
    }

    fn text(&mut self, k: &str, v: impl Into<String>) {
        self.0.insert(k.to_string(), ParamValue::Text(v.into()));
    }

    fn intervals(&mut self, len: usize, cfg: &DetectorConfig, seed: u64) -> Result<RandomIntervalSet> {
        let m = self.int("intervals", cfg.intervals.unwrap_or(DEFAULT_INTERVALS));
        if let Some(cap) = cfg.max_interval_length {
            self.int("max_interval_length", cap);
        }
        self.0.insert("interval_seed".into(), ParamValue::Int(seed));
        Ok(sample_intervals(len, m, cfg.max_interval_length, seed)?)
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn scalar(obs: &Observations, model: Model) -> Result<Vec<f64>> {
    match obs {
        Observations::Scalar(x) => Ok(x.clone()),
        Observations::Vector(v) if v.dim() == 1 => Ok(v.as_flat().to_vec()),
        _ => Err(Error::invalid(format!("model {model} needs a univariate series"))),
    }
}

fn vector(obs: &Observations, model: Model) -> Result<VectorSeries> {
    match obs {
        Observations::Scalar(x) => Ok(VectorSeries::from_scalars(x)?),
        Observations::Vector(v) => Ok(v.clone()),
        Observations::Network(_) => Err(Error::invalid(format!("model {model} needs a numeric series"))),
    }
}

/// Runs `method` for `model` on `obs`. `seed` drives interval sampling and
/// the kernel bandwidth subsample. Two-sample methods (covariance and
/// network) split the series into odd- and even-indexed halves and report
/// change points on the original time scale via `t -> 2t`.
pub fn detect(
    model: Model,
    method: Method,
    obs: &Observations,
    cfg: &DetectorConfig,
    seed: u64,
) -> Result<Detection> {
    if !Method::supported(model).contains(&method) {
        return Err(Error::invalid(format!(
            "method {method} is not available for model {model} (supported: {})",
            Method::supported(model)
                .iter()
                .map(|m| m.name())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    let allowed = tuning_keys(model, method);
    if let Some(k) = cfg.set_keys().into_iter().find(|k| !allowed.contains(k)) {
        return Err(Error::invalid(format!(
            "tuning value `{k}` does not apply to {model}/{method} (accepted: {})",
            allowed.join(", ")
        )));
    }
    let mut rec = Recorder(BTreeMap::new());
    let mut warnings = Vec::new();
    let mut initial = None;
    let mut flagged = Vec::new();

    let change_points = match model {
        Model::Mean => {
            let x = MeanSeries::new(scalar(obs, model)?)?;
            match method {
                Method::Pdp => {
                    let lambda = rec.float("lambda", match cfg.lambda {
                        Some(l) => nonnegative("lambda", l)?,
                        None => mean::default_lambda(&x),
                    });
                    mean::detect_mean_pdp(&x, lambda)?
                }
                _ => {
                    let ivs = rec.intervals(x.len(), cfg, seed)?;
                    let tau = rec.float("tau", match cfg.tau {
                        Some(t) => nonnegative("tau", t)?,
                        None => mean::default_tau(&x),
                    });
                    mean::detect_mean_wbs(&x, &ivs, tau)?
                }
            }
        }
        Model::Poly => {
            let x = MeanSeries::new(scalar(obs, model)?)?;
            let r = rec.int("order", cfg.order.unwrap_or(DEFAULT_ORDER));
            let lambda = rec.float("lambda", match cfg.lambda {
                Some(l) => nonnegative("lambda", l)?,
                None => poly::default_lambda(&x, r),
            });
            let cost = poly::PolyCost::new(&x, r);
            let found = solve_min_partition(x.len(), &cost, lambda)?.change_points;
            if cost.conditioning_warning() {
                warnings.push("ridge fallback used in at least one polynomial fit".to_string());
            }
            if method == Method::Refined && !found.is_empty() {
                let refined = poly::refine_poly(&x, r, &found)?;
                flagged = refined.flagged;
                initial = Some(found);
                refined.points
            } else {
                if method == Method::Refined {
                    initial = Some(found.clone());
                }
                found
            }
        }
        Model::Covariance => {
            let full = vector(obs, model)?;
            let (x, w) = covariance::split_even_odd(&full)?;
            let log_t = (x.len() as f64).ln();
            let options = covariance::WbsipOptions {
                pc_buffer: Some(rec.float("pc_buffer", match cfg.pc_buffer {
                    Some(b) => nonnegative("pc_buffer", b)?,
                    None => covariance::default_pc_buffer(&w),
                })),
                scan_margin: Some(rec.float("scan_margin", match cfg.scan_margin {
                    Some(m) => nonnegative("scan_margin", m)?,
                    None => log_t,
                })),
            };
            let ivs = rec.intervals(x.len(), cfg, seed)?;
            let tau = rec.float("tau", match cfg.tau {
                Some(t) => nonnegative("tau", t)?,
                None => covariance::default_tau(&x),
            });
            covariance::detect_cov_wbsip_with(&x, &w, &ivs, tau, &options)?.to_full_scale()
        }
        Model::Network => {
            let Observations::Network(full) = obs else {
                return Err(Error::invalid("model network needs an adjacency series"));
            };
            let (a, w) = full.split_even_odd()?;
            let ivs = rec.intervals(a.len(), cfg, seed)?;
            let tau1 = rec.float("tau1", match cfg.tau1 {
                Some(t) => nonnegative("tau1", t)?,
                None => network::default_tau1(&a, &w),
            });
            let found = network::nbs_detect(&a, &w, &ivs, tau1)?;
            if method == Method::Refined {
                let tau2 = rec.float("tau2", match cfg.tau2 {
                    Some(t) => positive("tau2", t)?,
                    None => network::default_tau2(&a, &w),
                });
                let tau3 = rec.float("tau3", match cfg.tau3 {
                    Some(t) => positive("tau3", t)?,
                    None => network::default_tau3(&a, &w),
                });
                initial = Some(found.to_full_scale());
                if found.is_empty() {
                    found
                } else if !(tau2 > 0.0 && tau3 > 0.0) {
                    warnings.push("empty networks: refinement skipped".to_string());
                    found.to_full_scale()
                } else {
                    let refined = network::refine_network(&a, &w, &found, tau2, tau3)?;
                    flagged = refined.flagged;
                    refined.points.to_full_scale()
                }
            } else {
                found.to_full_scale()
            }
        }
        Model::Ks => {
            let x = MeanSeries::new(scalar(obs, model)?)?;
            let ivs = rec.intervals(x.len(), cfg, seed)?;
            let tau = rec.float("tau", match cfg.tau {
                Some(t) => nonnegative("tau", t)?,
                None => nonparametric::default_tau_ks(x.len()),
            });
            nonparametric::detect_ks_wbs(&x, &ivs, tau)?
        }
        Model::Density => {
            let x = vector(obs, model)?;
            let family: KernelFamily = cfg
                .kernel
                .as_deref()
                .unwrap_or("gaussian")
                .parse()?;
            rec.text("kernel", family.to_string());
            let h = rec.float("bandwidth", match cfg.bandwidth {
                Some(h) => positive("bandwidth", h)?,
                None => nonparametric::default_bandwidth(&x),
            });
            let spec = KernelSpec::new(family, h, x.dim())?;
            let score = KdeScore::new(&x, &spec)?;
            let ivs = rec.intervals(x.len(), cfg, seed)?;
            let tau = rec.float("tau", match cfg.tau {
                Some(t) => nonnegative("tau", t)?,
                None => nonparametric::default_tau_kde(&score, &spec),
            });
            wbs_scan(x.len(), &score, &ivs, tau, &IdentityTrim)?
        }
        Model::Kernel => {
            let x = vector(obs, model)?;
            let kernel = match cfg.kernel.as_deref().unwrap_or("rbf") {
                "linear" => {
                    if cfg.gamma.is_some() {
                        return Err(Error::invalid("gamma applies only to the rbf kernel"));
                    }
                    rec.text("kernel", "linear");
                    Kernel::Linear
                }
                "rbf" => {
                    rec.text("kernel", "rbf");
                    let gamma = rec.float("gamma", match cfg.gamma {
                        Some(g) => positive("gamma", g)?,
                        None => rkhs::median_heuristic_gamma(&x, seed),
                    });
                    Kernel::Rbf { gamma }
                }
                other => {
                    return Err(Error::invalid(format!(
                        "unknown kernel `{other}` (expected linear or rbf)"
                    )))
                }
            };
            let lambda = rec.float("lambda", match cfg.lambda {
                Some(l) => nonnegative("lambda", l)?,
                None => rkhs::default_lambda(&x, kernel),
            });
            let cost = rkhs::KernelCost::from_series(&x, kernel)?;
            let found = solve_min_partition(x.len(), &cost, lambda)?.change_points;
            if method == Method::Refined {
                initial = Some(found.clone());
                if found.is_empty() {
                    found
                } else {
                    let refined = rkhs::refine_kernel(&x, kernel, &found)?;
                    flagged = refined.flagged;
                    refined.points
                }
            } else {
                found
            }
        }
    };

    Ok(Detection {
        change_points,
        initial,
        flagged,
        params: rec.0,
        warnings,
    })
}
