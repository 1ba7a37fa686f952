//! Model-agnostic engines: the exact minimal-partition solver, the wild
//! binary segmentation driver, random interval sampling and evaluation
//! metrics.

mod dp;
mod metrics;
mod noise;
mod refine;
mod sampling;
mod wbs;

pub use dp::{solve_min_partition, MinPartition, SegmentCost};
pub use metrics::hausdorff;
pub use noise::estimate_noise_scale;
pub(crate) use noise::median_in_place as median;
pub use refine::{refinement_windows, Refined};
pub use sampling::{sample_intervals, RandomIntervalSet};
pub use wbs::{
    wbs_scan, FractionTrim, IdentityTrim, MarginTrim, ScanScore, ScanWindow, TrimRule,
};
