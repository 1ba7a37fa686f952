//! Merges command-line flags with `--config` files into validated runs.
//!
//! A configuration file uses the same `key = value` syntax as scenario
//! files. Keys are the long flag names with `_` or `-`; flags win over file
//! values, unknown keys are rejected and relative paths are resolved against
//! the directory of the file. An optional `command` key must name the
//! subcommand being run.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cpkit_sim::config::{parse_entries, Entry};
use cpkit_sim::{DetectorConfig, GridPoint, Method, Model, ScenarioSpec, SweepConfig};

use crate::args::{BenchmarkArgs, DetectArgs, SimulateArgs, TuningArgs};
use crate::error::{CliError, Result};
use crate::io::read_text;

/// Replicates per grid point when none is configured.
pub const DEFAULT_REPS: usize = 100;

pub struct ConfigFile {
    path: PathBuf,
    entries: Vec<Entry>,
}

impl ConfigFile {
    pub fn empty() -> Self {
        Self {
            path: PathBuf::new(),
            entries: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(path, &read_text(path)?)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let entries = parse_entries(text).map_err(|e| CliError::in_file(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        Some(self.entries.remove(i))
    }

    fn peek(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn value<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        self.take(key)
            .map(|e| e.parse().map_err(|err| CliError::in_file(&self.path, err)))
            .transpose()
    }

    fn path_value(&mut self, key: &str) -> Option<PathBuf> {
        let e = self.take(key)?;
        let dir = self.path.parent().unwrap_or(Path::new(""));
        Some(dir.join(e.value))
    }

    fn check_command(&mut self, name: &str) -> Result<()> {
        match self.take("command") {
            Some(e) if e.value != name => Err(CliError::parse(
                &self.path,
                e.line,
                format!("configuration is for `{}`, not `{name}`", e.value),
            )),
            _ => Ok(()),
        }
    }

    fn reject_rest(self) -> Result<()> {
        match self.entries.first() {
            Some(e) => Err(CliError::parse(&self.path, e.line, format!("unknown key `{}`", e.key))),
            None => Ok(()),
        }
    }
}

fn pick<T: FromStr>(flag: Option<T>, cfg: &mut ConfigFile, key: &str) -> Result<Option<T>>
where
    T::Err: Display,
{
    // Always consume the file value so that it is not reported as unknown.
    let file = cfg.value(key)?;
    Ok(flag.or(file))
}

fn parse_name<T: FromStr<Err = cpkit_sim::Error>>(value: &str) -> Result<T> {
    value.parse().map_err(|e: cpkit_sim::Error| CliError::usage(e.to_string()))
}

/// Tuning values from flags, falling back to the file.
pub fn merge_tuning(flags: &TuningArgs, cfg: &mut ConfigFile) -> Result<DetectorConfig> {
    Ok(DetectorConfig {
        lambda: pick(flags.lambda, cfg, "lambda")?,
        tau: pick(flags.tau, cfg, "tau")?,
        intervals: pick(flags.intervals, cfg, "intervals")?,
        max_interval_length: pick(flags.max_interval_length, cfg, "max_interval_length")?,
        bandwidth: pick(flags.bandwidth, cfg, "bandwidth")?,
        order: pick(flags.order, cfg, "order")?,
        kernel: pick(flags.kernel.clone(), cfg, "kernel")?,
        gamma: pick(flags.gamma, cfg, "gamma")?,
        tau1: pick(flags.tau1, cfg, "tau1")?,
        tau2: pick(flags.tau2, cfg, "tau2")?,
        tau3: pick(flags.tau3, cfg, "tau3")?,
        pc_buffer: pick(flags.pc_buffer, cfg, "pc_buffer")?,
        scan_margin: pick(flags.scan_margin, cfg, "scan_margin")?,
    })
}

fn load_optional(path: Option<&Path>) -> Result<ConfigFile> {
    path.map_or_else(|| Ok(ConfigFile::empty()), ConfigFile::load)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectRun {
    pub model: Model,
    pub method: Method,
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub timing: bool,
    pub tuning: DetectorConfig,
    pub threads: Option<usize>,
}

impl DetectRun {
    pub fn from_args(args: &DetectArgs, threads: Option<usize>) -> Result<Self> {
        let mut cfg = load_optional(args.config.as_deref())?;
        Self::merge(args, threads, &mut cfg).and_then(|run| cfg.reject_rest().map(|_| run))
    }

    fn merge(args: &DetectArgs, threads: Option<usize>, cfg: &mut ConfigFile) -> Result<Self> {
        cfg.check_command("detect")?;
        let model = pick(args.model.clone(), cfg, "model")?
            .ok_or_else(|| CliError::usage("detect needs --model"))?;
        let method = pick(args.method.clone(), cfg, "method")?
            .ok_or_else(|| CliError::usage("detect needs --method"))?;
        let input = args.input.clone().or_else(|| cfg.path_value("input"));
        let output = args.output.clone().or_else(|| cfg.path_value("output"));
        let file_timing: Option<bool> = cfg.value("timing")?;
        Ok(Self {
            model: parse_name(&model)?,
            method: parse_name(&method)?,
            input: input.ok_or_else(|| CliError::usage("detect needs --input"))?,
            output,
            seed: pick(args.seed, cfg, "seed")?.unwrap_or(0),
            timing: args.timing || file_timing.unwrap_or(false),
            tuning: merge_tuning(&args.tuning, cfg)?,
            threads: pick(threads, cfg, "threads")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateRun {
    pub spec: ScenarioSpec,
    pub output: PathBuf,
    pub sidecar: PathBuf,
    pub threads: Option<usize>,
}

/// `<output>.truth.json`.
pub fn default_sidecar(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".truth.json");
    PathBuf::from(name)
}

impl SimulateRun {
    pub fn from_args(args: &SimulateArgs, threads: Option<usize>) -> Result<Self> {
        let mut cfg = ConfigFile::load(&args.config)?;
        cfg.check_command("simulate")?;
        let output = args
            .output
            .clone()
            .or_else(|| cfg.path_value("output"))
            .ok_or_else(|| CliError::usage("simulate needs --output"))?;
        let sidecar = args
            .sidecar
            .clone()
            .or_else(|| cfg.path_value("sidecar"))
            .unwrap_or_else(|| default_sidecar(&output));
        let threads = pick(threads, &mut cfg, "threads")?;
        let path = cfg.path.clone();
        let mut spec = ScenarioSpec::from_entries(cfg.entries).map_err(|e| CliError::in_file(&path, e))?;
        if let Some(seed) = args.seed {
            spec.seed = seed;
        }
        Ok(Self {
            spec,
            output,
            sidecar,
            threads,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRun {
    pub model: Model,
    pub grid: Vec<GridPoint>,
    pub sweep: SweepConfig,
    pub output: PathBuf,
    pub threads: Option<usize>,
}

impl BenchmarkRun {
    /// Sweep files hold a base scenario plus
    ///
    /// * `method`, `reps` (default 100), `seed` (default 0), `output`,
    ///   `timing` and any tuning key;
    /// * optionally `grid = <scenario key>` with `grid_values = v1 | v2 | ..`
    ///   and `grid_labels = a | b | ..`. Each value replaces the base value
    ///   of that key. Without a grid the base scenario is the only point.
    pub fn from_args(args: &BenchmarkArgs, threads: Option<usize>) -> Result<Self> {
        let mut cfg = ConfigFile::load(&args.config)?;
        cfg.check_command("benchmark")?;
        let method = pick(args.method.clone(), &mut cfg, "method")?
            .ok_or_else(|| CliError::usage("benchmark needs a method"))?;
        let method: Method = parse_name(&method)?;
        let output = args
            .output
            .clone()
            .or_else(|| cfg.path_value("output"))
            .ok_or_else(|| CliError::usage("benchmark needs --output"))?;
        let reps = pick(args.reps, &mut cfg, "reps")?.unwrap_or(DEFAULT_REPS);
        let seed = pick(args.seed, &mut cfg, "seed")?.unwrap_or(0);
        let file_timing: Option<bool> = cfg.value("timing")?;
        let detector = merge_tuning(&args.tuning, &mut cfg)?;
        let threads = pick(threads, &mut cfg, "threads")?;
        let model: Model = match cfg.peek("model") {
            Some(e) => e
                .value
                .parse()
                .map_err(|err: cpkit_sim::Error| CliError::parse(&cfg.path, e.line, err.to_string()))?,
            None => return Err(CliError::parse(&cfg.path, 0, "missing required key `model`")),
        };
        let grid = build_grid(&mut cfg)?;
        Ok(Self {
            model,
            grid,
            sweep: SweepConfig {
                method,
                detector,
                reps,
                seed,
                timing: args.timing || file_timing.unwrap_or(false),
            },
            output,
            threads,
        })
    }
}

fn split_bar(s: &str) -> Vec<String> {
    s.split('|').map(|v| v.trim().to_string()).collect()
}

fn build_grid(cfg: &mut ConfigFile) -> Result<Vec<GridPoint>> {
    let path = cfg.path.clone();
    let key = cfg.take("grid");
    let values = cfg.take("grid_values");
    let labels = cfg.take("grid_labels");
    let base = std::mem::take(&mut cfg.entries);
    let spec_of = |entries: Vec<Entry>| {
        ScenarioSpec::from_entries(entries).map_err(|e| CliError::in_file(&path, e))
    };
    let (key, values) = match (key, values) {
        (None, None) => {
            if let Some(l) = labels {
                return Err(CliError::parse(&path, l.line, "grid_labels without grid"));
            }
            return Ok(vec![GridPoint {
                label: "base".into(),
                spec: spec_of(base)?,
            }]);
        }
        (Some(k), Some(v)) => (k, v),
        (Some(e), None) | (None, Some(e)) => {
            return Err(CliError::parse(&path, e.line, "grid and grid_values must be given together"))
        }
    };
    let grid_key = key.value.trim().to_ascii_lowercase().replace('-', "_");
    if matches!(grid_key.as_str(), "model" | "seed") {
        return Err(CliError::parse(&path, key.line, format!("cannot sweep over `{grid_key}`")));
    }
    let vals = split_bar(&values.value);
    if vals.iter().any(String::is_empty) {
        return Err(CliError::parse(&path, values.line, "empty grid value"));
    }
    let names = match labels {
        Some(l) => {
            let names = split_bar(&l.value);
            if names.len() != vals.len() {
                return Err(CliError::parse(
                    &path,
                    l.line,
                    format!("{} labels for {} grid values", names.len(), vals.len()),
                ));
            }
            names
        }
        None => vals.iter().map(|v| format!("{grid_key}={v}")).collect(),
    };
    vals.into_iter()
        .zip(names)
        .map(|(v, label)| {
            let mut entries: Vec<Entry> = base.iter().filter(|e| e.key != grid_key).cloned().collect();
            entries.push(Entry {
                line: values.line,
                key: grid_key.clone(),
                value: v,
            });
            Ok(GridPoint {
                label,
                spec: spec_of(entries)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ConfigFile {
        ConfigFile::parse(Path::new("run.cfg"), text).unwrap()
    }

    fn detect_args() -> DetectArgs {
        DetectArgs {
            config: None,
            model: None,
            method: None,
            input: None,
            output: None,
            seed: None,
            timing: false,
            tuning: TuningArgs::default(),
        }
    }

    #[test]
    fn flags_override_file() {
        let mut c = cfg("model = mean\nmethod = wbs\ninput = data.csv\ntau = 3\nseed = 5\n");
        let mut args = detect_args();
        args.method = Some("pdp".into());
        args.tuning.tau = Some(1.5);
        let run = DetectRun::merge(&args, None, &mut c).unwrap();
        c.reject_rest().unwrap();
        assert_eq!(run.model, Model::Mean);
        assert_eq!(run.method, Method::Pdp);
        assert_eq!(run.tuning.tau, Some(1.5));
        assert_eq!(run.seed, 5);
        assert_eq!(run.input, PathBuf::from("data.csv"));
    }

    #[test]
    fn paths_resolve_against_config_dir() {
        let mut c = ConfigFile::parse(Path::new("runs/a.cfg"), "input = x.csv\n").unwrap();
        assert_eq!(c.path_value("input"), Some(PathBuf::from("runs/x.csv")));
    }

    #[test]
    fn unknown_key_names_line() {
        let mut c = cfg("model = mean\nmethod = pdp\ninput = x\nlamda = 1\n");
        DetectRun::merge(&detect_args(), None, &mut c).unwrap();
        let err = c.reject_rest().unwrap_err();
        assert_eq!(err.to_string(), "run.cfg:4: unknown key `lamda`");
    }

    #[test]
    fn command_key_checked() {
        let mut c = cfg("command = simulate\n");
        assert!(DetectRun::merge(&detect_args(), None, &mut c).is_err());
    }

    #[test]
    fn missing_model_is_usage_error() {
        let mut c = cfg("method = pdp\ninput = x\n");
        let err = DetectRun::merge(&detect_args(), None, &mut c).unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
    }

    #[test]
    fn grid_replaces_base_value() {
        let mut c = cfg(
            "model = mean\nlength = 100\nchange_points = 51\nmeans = 0, 1\nsigma = 1\n\
             grid = sigma\ngrid_values = 0.5 | 2\n",
        );
        let grid = build_grid(&mut c).unwrap();
        assert_eq!(grid.len(), 2);
        assert_eq!(grid[0].label, "sigma=0.5");
        assert_eq!(grid[1].spec.sigma, 2.0);
    }

    #[test]
    fn grid_errors() {
        let base = "model = mean\nlength = 100\nchange_points = 51\nmeans = 0, 1\n";
        assert!(build_grid(&mut cfg(&format!("{base}grid = sigma\n"))).is_err());
        assert!(build_grid(&mut cfg(&format!("{base}grid = seed\ngrid_values = 1\n"))).is_err());
        let labels = format!("{base}grid = sigma\ngrid_values = 1 | 2\ngrid_labels = a\n");
        assert!(build_grid(&mut cfg(&labels)).is_err());
        let bad = format!("{base}grid = sigma\ngrid_values = 1 | x\n");
        assert!(build_grid(&mut cfg(&bad)).is_err());
    }

    #[test]
    fn sidecar_default_appends_suffix() {
        assert_eq!(default_sidecar(Path::new("out/d.csv")), PathBuf::from("out/d.csv.truth.json"));
    }
}
