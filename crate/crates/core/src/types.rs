//! Index conventions shared by every model.
//!
//! Observations are indexed `1..=T`. An [`Interval`] is a closed, 1-based
//! range of observation indices. A change point is the first index of a new
//! segment, so it always lies in `2..=T`.
//!
//! Scan statistics use the half-open CUSUM convention instead: a triple
//! `(s, t, e)` with `0 <= s < t < e <= T` compares observations `s+1..=t`
//! against `t+1..=e`. A split at `t` therefore declares change point `t + 1`.

use crate::error::{Error, Result};

/// Closed interval of 1-based observation indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    start: usize,
    end: usize,
}

impl Interval {
    /// Builds `[start, end]`, requiring `1 <= start <= end`.
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start == 0 || start > end {
            return Err(Error::invalid(format!(
                "interval [{start}, {end}] must satisfy 1 <= start <= end"
            )));
        }
        Ok(Self { start, end })
    }

    pub(crate) const fn new_unchecked(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    #[inline]
    pub const fn start(&self) -> usize {
        self.start
    }

    #[inline]
    pub const fn end(&self) -> usize {
        self.end
    }

    #[inline]
    #[allow(clippy::len_without_is_empty)]
    pub const fn len(&self) -> usize {
        self.end - self.start + 1
    }

    /// Zero-based half-open range into a slice holding observations `1..=T`.
    #[inline]
    pub const fn as_range(&self) -> std::ops::Range<usize> {
        self.start - 1..self.end
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }

    /// Checks that the interval fits inside `1..=len`.
    pub fn check_within(&self, len: usize) -> Result<()> {
        if self.end > len {
            return Err(Error::invalid(format!(
                "interval [{}, {}] exceeds series length {len}",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

/// Sorted set of change points, each the first index of a new segment.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ChangePointSet(Vec<usize>);

impl ChangePointSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Validates that `points` is strictly increasing and inside `2..=len`.
    pub fn new(points: Vec<usize>, len: usize) -> Result<Self> {
        if let Some(&first) = points.first() {
            if first < 2 {
                return Err(Error::invalid(format!(
                    "change point {first} must be at least 2"
                )));
            }
        }
        if let Some(&last) = points.last() {
            if last > len {
                return Err(Error::invalid(format!(
                    "change point {last} exceeds series length {len}"
                )));
            }
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("change points must be strictly increasing"));
        }
        Ok(Self(points))
    }

    /// Sorts and deduplicates without range checks.
    pub fn from_unsorted(mut points: Vec<usize>) -> Self {
        points.sort_unstable();
        points.dedup();
        Self(points)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &usize> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// Maps change points detected on a half-sample back to the original
    /// time scale (`t -> 2t`).
    pub fn to_full_scale(&self) -> Self {
        Self(self.0.iter().map(|&t| 2 * t).collect())
    }

    /// Segments implied by these change points over `1..=len`.
    pub fn segments(&self, len: usize) -> IntervalPartition {
        let mut bounds = Vec::with_capacity(self.0.len() + 2);
        bounds.push(1);
        bounds.extend_from_slice(&self.0);
        bounds.push(len + 1);
        IntervalPartition(
            bounds
                .windows(2)
                .map(|w| Interval::new_unchecked(w[0], w[1] - 1))
                .collect(),
        )
    }

    /// Minimal spacing between consecutive boundaries `1, eta_1, .., eta_K, len + 1`.
    pub fn min_spacing(&self, len: usize) -> usize {
        self.segments(len)
            .intervals()
            .iter()
            .map(Interval::len)
            .min()
            .unwrap_or(0)
    }
}

impl From<ChangePointSet> for Vec<usize> {
    fn from(value: ChangePointSet) -> Self {
        value.0
    }
}

/// Ordered, disjoint intervals covering `1..=T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalPartition(Vec<Interval>);

impl IntervalPartition {
    /// Validates contiguity and coverage of `1..=len`.
    pub fn new(intervals: Vec<Interval>, len: usize) -> Result<Self> {
        let mut next = 1;
        for iv in &intervals {
            if iv.start() != next {
                return Err(Error::invalid(format!(
                    "partition gap or overlap at {iv}, expected start {next}"
                )));
            }
            next = iv.end() + 1;
        }
        if next != len + 1 {
            return Err(Error::invalid(format!(
                "partition covers 1..={} but the series has length {len}",
                next - 1
            )));
        }
        Ok(Self(intervals))
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Left endpoints of all intervals but the first.
    pub fn change_points(&self) -> ChangePointSet {
        ChangePointSet(self.0.iter().skip(1).map(Interval::start).collect())
    }
}
