use crate::types::ChangePointSet;

/// Two-sided Hausdorff distance between two change point sets.
///
/// Zero when both sets are empty and infinite when exactly one is.
pub fn hausdorff(a: &ChangePointSet, b: &ChangePointSet) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        (false, false) => directed(a.as_slice(), b.as_slice()).max(directed(b.as_slice(), a.as_slice())),
    }
}

/// `max_{x in from} min_{y in to} |x - y|`, with `to` sorted.
fn directed(from: &[usize], to: &[usize]) -> f64 {
    from.iter()
        .map(|&x| {
            let pos = to.partition_point(|&y| y < x);
            let right = to.get(pos).map(|&y| y - x);
            let left = pos.checked_sub(1).map(|i| x - to[i]);
            match (left, right) {
                (Some(l), Some(r)) => l.min(r),
                (Some(d), None) | (None, Some(d)) => d,
                (None, None) => unreachable!("target set is nonempty"),
            }
        })
        .max()
        .map_or(0.0, |d| d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[usize]) -> ChangePointSet {
        ChangePointSet::from_unsorted(v.to_vec())
    }

    /// All pairwise distances, directed maxima taken both ways.
    fn brute(a: &[usize], b: &[usize]) -> f64 {
        let dir = |x: &[usize], y: &[usize]| {
            x.iter()
                .map(|&p| y.iter().map(|&q| p.abs_diff(q)).min().unwrap())
                .max()
                .unwrap()
        };
        dir(a, b).max(dir(b, a)) as f64
    }

    #[test]
    fn empty_conventions() {
        assert_eq!(hausdorff(&set(&[]), &set(&[])), 0.0);
        assert_eq!(hausdorff(&set(&[]), &set(&[3])), f64::INFINITY);
        assert_eq!(hausdorff(&set(&[3]), &set(&[])), f64::INFINITY);
    }

    #[test]
    fn small_example() {
        assert_eq!(hausdorff(&set(&[1, 10]), &set(&[2, 8])), 2.0);
        assert_eq!(brute(&[1, 10], &[2, 8]), 2.0);
    }

    proptest! {
        #[test]
        fn symmetric_and_matches_enumeration(
            a in proptest::collection::btree_set(2usize..200, 1..8),
            b in proptest::collection::btree_set(2usize..200, 1..8),
        ) {
            let a: Vec<_> = a.into_iter().collect();
            let b: Vec<_> = b.into_iter().collect();
            let (sa, sb) = (set(&a), set(&b));
            prop_assert_eq!(hausdorff(&sa, &sb), hausdorff(&sb, &sa));
            prop_assert_eq!(hausdorff(&sa, &sb), brute(&a, &b));
            prop_assert_eq!(hausdorff(&sa, &sa), 0.0);
        }
    }
}
