use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{ChangePointSet, Interval, IntervalPartition};

/// Prefix lengths at or above this evaluate their costs in parallel.
const PARALLEL_MIN_END: usize = 512;

/// Segment cost `H(I)` of a partition-based estimator.
///
/// Implementations must be finite and nonnegative on every interval of the
/// series they were built for.
pub trait SegmentCost: Sync {
    fn cost(&self, interval: Interval) -> f64;

    /// Fills `out[s - 1]` with the cost of `[s, end]` for `s = 1..=end`.
    ///
    /// The solver calls this exactly once per right endpoint, so each
    /// interval is evaluated once. Overrides may reuse work across `s`, but
    /// must agree bit-for-bit with [`SegmentCost::cost`].
    fn costs_ending_at(&self, end: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), end);
        if end >= PARALLEL_MIN_END {
            out.par_iter_mut()
                .enumerate()
                .for_each(|(i, c)| *c = self.cost(Interval::new_unchecked(i + 1, end)));
        } else {
            for (i, c) in out.iter_mut().enumerate() {
                *c = self.cost(Interval::new_unchecked(i + 1, end));
            }
        }
    }
}

impl<F> SegmentCost for F
where
    F: Fn(Interval) -> f64 + Sync,
{
    fn cost(&self, interval: Interval) -> f64 {
        self(interval)
    }
}

/// Exact minimiser of `sum_I H(I) + lambda * |P|`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinPartition {
    pub partition: IntervalPartition,
    pub change_points: ChangePointSet,
    pub objective: f64,
}

#[derive(Clone, Copy)]
struct Prefix {
    objective: f64,
    segments: usize,
    /// Start of the last segment of the best partition of `1..=end`.
    last_start: usize,
}

/// Solves the penalised minimal partition problem over `1..=len` by Bellman
/// recursion on right endpoints, using `O(len^2)` cost evaluations.
///
/// The objective is accumulated left to right as `((H_1 + lambda) + H_2) +
/// lambda ...`. Ties are broken by fewest segments, then by the
/// lexicographically smallest list of change points.
pub fn solve_min_partition<C: SegmentCost + ?Sized>(
    len: usize,
    cost: &C,
    lambda: f64,
) -> Result<MinPartition> {
    if len == 0 {
        return Err(Error::invalid("cannot partition an empty series"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("penalty must be positive and finite, got {lambda}")));
    }

    let mut best = Vec::with_capacity(len + 1);
    best.push(Prefix {
        objective: 0.0,
        segments: 0,
        last_start: 0,
    });
    let mut costs = vec![0.0; len];

    for end in 1..=len {
        let row = &mut costs[..end];
        cost.costs_ending_at(end, row);
        if let Some(bad) = row.iter().position(|c| !c.is_finite()) {
            return Err(Error::numeric(format!(
                "segment cost of [{}, {end}] is not finite",
                bad + 1
            )));
        }

        let mut winner = Prefix {
            objective: f64::INFINITY,
            segments: usize::MAX,
            last_start: 0,
        };
        for (i, &c) in row.iter().enumerate() {
            let start = i + 1;
            let prev = best[start - 1];
            let candidate = Prefix {
                objective: prev.objective + c + lambda,
                segments: prev.segments + 1,
                last_start: start,
            };
            let better = match candidate.objective.total_cmp(&winner.objective) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => match candidate.segments.cmp(&winner.segments) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => {
                        breakpoints_with(&best, start) < breakpoints_with(&best, winner.last_start)
                    }
                },
            };
            if better {
                winner = candidate;
            }
        }
        best.push(winner);
    }

    let mut starts = Vec::with_capacity(best[len].segments);
    let mut end = len;
    while end > 0 {
        let start = best[end].last_start;
        starts.push(start);
        end = start - 1;
    }
    starts.reverse();
    let intervals: Vec<Interval> = starts
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let e = starts.get(k + 1).map_or(len, |&next| next - 1);
            Interval::new_unchecked(s, e)
        })
        .collect();
    let partition = IntervalPartition::new(intervals, len)?;
    Ok(MinPartition {
        change_points: partition.change_points(),
        partition,
        objective: best[len].objective,
    })
}

/// Change points of the best prefix partition of `1..start-1`, followed by
/// `start` itself when it opens a new segment.
fn breakpoints_with(best: &[Prefix], start: usize) -> Vec<usize> {
    let mut pts = Vec::new();
    if start > 1 {
        pts.push(start);
    }
    let mut end = start.saturating_sub(1);
    while end > 0 {
        let s = best[end].last_start;
        if s > 1 {
            pts.push(s);
        }
        end = s - 1;
    }
    pts.reverse();
    pts
}
