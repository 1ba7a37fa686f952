use crate::types::{ChangePointSet, Interval};

/// Output of a local refinement pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Refined {
    pub points: ChangePointSet,
    /// Positions (0-based, into the initial set) where the initial estimate
    /// was kept because the working interval or the fit was degenerate.
    pub flagged: Vec<usize>,
}

/// Working intervals for one-change-per-interval refinement.
///
/// Around each initial estimate `nu_k` the interval runs from
/// `floor((nu_{k-1} + nu_k) / 2) + 1` to `floor((nu_k + nu_{k+1}) / 2)`, with
/// `nu_0 = 1` and `nu_{K+1} = len + 1`. Consecutive intervals tile the range
/// between the outer midpoints.
pub fn refinement_windows(initial: &ChangePointSet, len: usize) -> Vec<Interval> {
    let pts = initial.as_slice();
    (0..pts.len())
        .map(|k| {
            let prev = if k == 0 { 1 } else { pts[k - 1] };
            let next = pts.get(k + 1).copied().unwrap_or(len + 1);
            let start = (prev + pts[k]) / 2 + 1;
            let end = ((pts[k] + next) / 2).max(start);
            Interval::new_unchecked(start, end.min(len))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_tile_between_midpoints() {
        let init = ChangePointSet::new(vec![51], 100).unwrap();
        assert_eq!(refinement_windows(&init, 100), vec![Interval::new(27, 76).unwrap()]);

        let init = ChangePointSet::new(vec![21, 41, 61], 80).unwrap();
        let w = refinement_windows(&init, 80);
        assert_eq!(w.len(), 3);
        for pair in w.windows(2) {
            assert_eq!(pair[0].end() + 1, pair[1].start());
        }
        for (iv, &p) in w.iter().zip(init.as_slice()) {
            assert!(iv.start() < p && p <= iv.end());
        }
    }
}
