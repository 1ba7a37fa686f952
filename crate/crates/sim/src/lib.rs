//! Synthetic scenarios for every cpkit model family and a Monte Carlo
//! harness that measures detection frequency and localisation error.
//!
//! * [`ScenarioSpec`] describes a piecewise-stationary series and reads and
//!   writes a plain `key = value` format.
//! * [`generate`] draws a seeded dataset with its ground truth.
//! * [`detect()`] runs any detector with its default tuning filled in.
//! * [`run_rate_sweep`] repeats generation and detection over a grid.

pub mod config;
pub mod detect;
mod error;
pub mod generate;
pub mod jump;
pub mod scenario;
pub mod sweep;

pub use detect::{detect, Detection, DetectorConfig, Method, ParamValue};
pub use error::{Error, Result};
pub use generate::{generate, Dataset, Observations};
pub use scenario::{Model, ScalarDist, ScenarioSpec, SegmentParams, Truth};
pub use sweep::{run_rate_sweep, GridPoint, RateReport, RateRow, SweepConfig};
