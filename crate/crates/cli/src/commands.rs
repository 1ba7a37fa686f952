//! The three subcommands. Each returns the text it prints on success.

use std::time::Instant;

use cpkit_sim::{
    detect, generate, run_rate_sweep, Detection, Model, ParamValue, RateReport, ScenarioSpec,
    Truth,
};
use serde_json::{json, Value};

use crate::args::{Cli, Command};
use crate::error::{CliError, Result};
use crate::io::{format_observations, read_observations, write_text};
use crate::settings::{BenchmarkRun, DetectRun, SimulateRun};

/// Version of the result and sidecar documents.
pub const SCHEMA_VERSION: u32 = 1;

pub fn run(cli: Cli) -> Result<String> {
    match &cli.command {
        Command::Detect(a) => {
            let run = DetectRun::from_args(a, cli.threads)?;
            with_threads(run.threads, || cmd_detect(&run))
        }
        Command::Simulate(a) => {
            let run = SimulateRun::from_args(a, cli.threads)?;
            with_threads(run.threads, || cmd_simulate(&run))
        }
        Command::Benchmark(a) => {
            let run = BenchmarkRun::from_args(a, cli.threads)?;
            with_threads(run.threads, || cmd_benchmark(&run))
        }
    }
}

/// Runs `f` on a pool of at most `threads` workers.
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(CliError::usage("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::usage(format!("cannot start {n} threads: {e}")))?
            .install(f),
    }
}

fn param_json(v: &ParamValue) -> Value {
    match v {
        ParamValue::Int(i) => json!(i),
        ParamValue::Float(x) => json!(x),
        ParamValue::Text(s) => json!(s),
    }
}

fn to_document(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialise");
    s.push('\n');
    s
}

/// The result document of a detection run. Keys are sorted; `runtime_ms`
/// is null unless timing was requested, so repeated runs are identical.
pub fn result_document(run: &DetectRun, series_length: usize, d: &Detection, runtime_ms: Option<f64>) -> String {
    let flagged: Vec<usize> = d.flagged.iter().map(|&k| d.change_points.as_slice()[k]).collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "model": run.model.name(),
        "method": run.method.name(),
        "input": run.input.display().to_string(),
        "series_length": series_length,
        "change_points": d.change_points.as_slice(),
        "initial_change_points": d.initial.as_ref().map(|c| c.as_slice().to_vec()),
        "flagged": flagged,
        "params": d.params.iter().map(|(k, v)| (k.clone(), param_json(v))).collect::<serde_json::Map<_, _>>(),
        "seed": run.seed,
        "runtime_ms": runtime_ms,
        "warnings": d.warnings,
    });
    to_document(&doc)
}

pub fn cmd_detect(run: &DetectRun) -> Result<String> {
    let obs = read_observations(&run.input, run.model == Model::Network)?;
    let start = Instant::now();
    let d = detect(run.model, run.method, &obs, &run.tuning, run.seed)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let doc = result_document(run, obs.len(), &d, run.timing.then_some(elapsed));
    match &run.output {
        Some(path) => {
            write_text(path, &doc)?;
            Ok(format!(
                "{} change point(s) written to {}\n",
                d.change_points.len(),
                path.display()
            ))
        }
        None => Ok(doc),
    }
}

/// Ground truth written next to simulated data.
pub fn sidecar_document(spec: &ScenarioSpec, truth: &Truth, data_file: &str) -> String {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "model": spec.model().name(),
        "data_file": data_file,
        "length": spec.len,
        "change_points": truth.change_points.as_slice(),
        "jumps": truth.jumps,
        "kappa": truth.kappa,
        "spacing": truth.spacing,
        "sparsity": truth.sparsity,
        "sigma": spec.sigma,
        "seed": spec.seed,
        "scenario": spec.to_config_string(),
    });
    to_document(&doc)
}

pub fn cmd_simulate(run: &SimulateRun) -> Result<String> {
    let data = generate(&run.spec)?;
    write_text(&run.output, &format_observations(&data.observations))?;
    let name = run
        .output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    write_text(&run.sidecar, &sidecar_document(&run.spec, &data.truth, &name))?;
    Ok(format!(
        "{} observations written to {}, ground truth to {}\n",
        data.observations.len(),
        run.output.display(),
        run.sidecar.display()
    ))
}

pub fn cmd_benchmark(run: &BenchmarkRun) -> Result<String> {
    let report: RateReport = run_rate_sweep(run.model, &run.grid, &run.sweep)?;
    write_text(&run.output, &report.to_csv())?;
    let mut out = String::new();
    for r in &report.rows {
        out.push_str(&format!(
            "point {} ({}): frequency {:.3}, median error {}, q90 error {}, failures {}\n",
            r.point, r.label, r.frequency, r.median_error, r.q90_error, r.failures
        ));
    }
    Ok(out)
}
