use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::Interval;

/// Random intervals feeding every wild binary segmentation variant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomIntervalSet {
    intervals: Vec<Interval>,
    seed: u64,
    max_length: Option<usize>,
}

impl RandomIntervalSet {
    /// Wraps explicit intervals, e.g. a deterministic cover for tests.
    pub fn from_intervals(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::invalid("at least one interval is required"));
        }
        if let Some(bad) = intervals.iter().find(|iv| iv.len() < 2) {
            return Err(Error::invalid(format!("interval {bad} is shorter than 2")));
        }
        Ok(Self {
            intervals,
            seed: 0,
            max_length: None,
        })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn max_length(&self) -> Option<usize> {
        self.max_length
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// Draws `count` intervals with endpoints independent and uniform on `1..=len`.
///
/// Draws with coincident endpoints are rejected. With `max_length`, longer
/// draws are shrunk symmetrically around their midpoint to exactly
/// `max_length`.
pub fn sample_intervals(
    len: usize,
    count: usize,
    max_length: Option<usize>,
    seed: u64,
) -> Result<RandomIntervalSet> {
    if len < 3 {
        return Err(Error::invalid(format!("series length {len} < 3")));
    }
    if count == 0 {
        return Err(Error::invalid("interval count must be at least 1"));
    }
    if let Some(cap) = max_length {
        if cap < 2 {
            return Err(Error::invalid(format!("max interval length {cap} < 2")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let intervals = (0..count)
        .map(|_| {
            let (mut lo, mut hi) = loop {
                let a = rng.random_range(1..=len);
                let b = rng.random_range(1..=len);
                if a != b {
                    break (a.min(b), a.max(b));
                }
            };
            if let Some(cap) = max_length {
                let length = hi - lo + 1;
                if length > cap {
                    let excess = length - cap;
                    lo += excess / 2;
                    hi -= excess - excess / 2;
                }
            }
            Interval::new_unchecked(lo, hi)
        })
        .collect();
    Ok(RandomIntervalSet {
        intervals,
        seed,
        max_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_determinism() {
        let a = sample_intervals(10, 3, None, 7).unwrap();
        let b = sample_intervals(10, 3, None, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_intervals(10, 3, None, 8).unwrap());
    }

    #[test]
    fn cap_is_enforced() {
        let set = sample_intervals(10, 5, Some(4), 1).unwrap();
        assert_eq!(set.len(), 5);
        assert!(set.intervals().iter().all(|iv| iv.len() <= 4 && iv.len() >= 2));
    }

    #[test]
    fn endpoints_in_range() {
        let set = sample_intervals(100, 200, None, 2).unwrap();
        assert!(set
            .intervals()
            .iter()
            .all(|iv| iv.start() >= 1 && iv.end() <= 100 && iv.len() >= 2));
    }

    #[test]
    fn shrink_keeps_midpoint() {
        let set = sample_intervals(1000, 500, Some(11), 3).unwrap();
        for iv in set.intervals() {
            assert!(iv.len() <= 11);
        }
        // Long draws land on exactly the cap.
        assert!(set.intervals().iter().any(|iv| iv.len() == 11));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(sample_intervals(2, 3, None, 0).is_err());
        assert!(sample_intervals(10, 0, None, 0).is_err());
        assert!(sample_intervals(10, 3, Some(1), 0).is_err());
    }
}
