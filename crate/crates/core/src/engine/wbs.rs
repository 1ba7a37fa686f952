use std::collections::HashMap;

use rayon::prelude::*;

use crate::engine::sampling::RandomIntervalSet;
use crate::error::{Error, Result};
use crate::types::ChangePointSet;

/// CUSUM window `(s, e)` plus the admissible split range `t_lo..=t_hi`,
/// all in the half-open convention (`0 <= s < t < e`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScanWindow {
    pub s: usize,
    pub e: usize,
    pub t_lo: usize,
    pub t_hi: usize,
}

/// Turns the intersection of a working segment with a random interval into
/// a scan window, or `None` when the intersection is too short to scan.
pub trait TrimRule: Sync {
    fn window(&self, s: usize, e: usize) -> Option<ScanWindow>;
}

/// Scan every split strictly inside the intersection; requires `e - s > 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTrim;

impl TrimRule for IdentityTrim {
    fn window(&self, s: usize, e: usize) -> Option<ScanWindow> {
        (e > s + 1).then_some(ScanWindow {
            s,
            e,
            t_lo: s + 1,
            t_hi: e - 1,
        })
    }
}

/// Shrinks the intersection by `(e - s) / denominator` at both ends before
/// scanning, as network binary segmentation does with `denominator = 64`.
#[derive(Debug, Clone, Copy)]
pub struct FractionTrim {
    pub denominator: f64,
}

impl TrimRule for FractionTrim {
    fn window(&self, s: usize, e: usize) -> Option<ScanWindow> {
        let cut = (e - s) as f64 / self.denominator;
        let s2 = (s as f64 + cut).ceil() as usize;
        let e2 = (e as f64 - cut).floor() as usize;
        (e2 > s2 + 1).then_some(ScanWindow {
            s: s2,
            e: e2,
            t_lo: s2 + 1,
            t_hi: e2 - 1,
        })
    }
}

/// Keeps the full intersection but only scans splits at least `margin` away
/// from both ends; requires `e - s >= 2 * margin + 1`.
#[derive(Debug, Clone, Copy)]
pub struct MarginTrim {
    pub margin: f64,
}

impl TrimRule for MarginTrim {
    fn window(&self, s: usize, e: usize) -> Option<ScanWindow> {
        if ((e - s) as f64) < 2.0 * self.margin + 1.0 {
            return None;
        }
        let t_lo = ((s as f64 + self.margin).ceil() as usize).max(s + 1);
        let t_hi = ((e as f64 - self.margin).floor() as usize).min(e - 1);
        (t_lo <= t_hi).then_some(ScanWindow { s, e, t_lo, t_hi })
    }
}

/// Scan statistic maximised by [`wbs_scan`].
pub trait ScanScore: Sync {
    /// Statistic at split `t` of window `(s, e)` for random interval
    /// `interval` (an index into the interval set).
    fn score(&self, interval: usize, s: usize, t: usize, e: usize) -> f64;

    /// Whether [`ScanScore::score`] depends on the interval index. When it
    /// does not, identical windows are scored once.
    fn depends_on_interval(&self) -> bool {
        false
    }

    /// Largest statistic over the window's split range and the smallest `t`
    /// attaining it.
    fn best_split(&self, interval: usize, w: &ScanWindow) -> (usize, f64) {
        let mut best = (w.t_lo, f64::NEG_INFINITY);
        for t in w.t_lo..=w.t_hi {
            let v = self.score(interval, w.s, t, w.e);
            if v > best.1 {
                best = (t, v);
            }
        }
        best
    }
}

/// Wild binary segmentation over `1..=len`.
///
/// Within the working segment `(s, e)` each random interval `[a, b]` is
/// intersected to `(max(s, a - 1), min(e, b))`, trimmed, and scanned. The
/// interval with the largest maximum (smallest index on ties) declares its
/// split `b*` when the maximum exceeds `tau`; the change point reported is
/// `b* + 1` and the scan recurses on `(s, b*)` and `(b*, e)`.
pub fn wbs_scan<S, R>(
    len: usize,
    score: &S,
    intervals: &RandomIntervalSet,
    tau: f64,
    trim: &R,
) -> Result<ChangePointSet>
where
    S: ScanScore + ?Sized,
    R: TrimRule + ?Sized,
{
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("threshold must be positive, got {tau}")));
    }
    if let Some(iv) = intervals.intervals().iter().find(|iv| iv.end() > len) {
        return Err(Error::invalid(format!("interval {iv} exceeds series length {len}")));
    }

    let mut found = Vec::new();
    let mut stack = vec![(0usize, len)];
    while let Some((s, e)) = stack.pop() {
        if e < s + 2 {
            continue;
        }
        let windows: Vec<Option<ScanWindow>> = intervals
            .intervals()
            .iter()
            .map(|iv| {
                let sm = s.max(iv.start() - 1);
                let em = e.min(iv.end());
                if em <= sm {
                    None
                } else {
                    trim.window(sm, em)
                }
            })
            .collect();

        let results: Vec<Option<(usize, f64)>> = if score.depends_on_interval() {
            windows
                .par_iter()
                .enumerate()
                .map(|(m, w)| w.as_ref().map(|w| score.best_split(m, w)))
                .collect()
        } else {
            let mut unique: Vec<ScanWindow> = windows.iter().flatten().copied().collect();
            unique.sort_unstable_by_key(|w| (w.s, w.e, w.t_lo, w.t_hi));
            unique.dedup();
            let scored: HashMap<ScanWindow, (usize, f64)> = unique
                .par_iter()
                .map(|w| (*w, score.best_split(0, w)))
                .collect();
            windows.iter().map(|w| w.map(|w| scored[&w])).collect()
        };

        let mut best: Option<(usize, f64)> = None;
        for (t, v) in results.into_iter().flatten() {
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((t, v));
            }
        }
        if let Some((t, v)) = best {
            if v > tau {
                found.push(t + 1);
                stack.push((t, e));
                stack.push((s, t));
            }
        }
    }
    Ok(ChangePointSet::from_unsorted(found))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Interval;

    struct Cusum<'a>(&'a [f64]);

    impl ScanScore for Cusum<'_> {
        fn score(&self, _m: usize, s: usize, t: usize, e: usize) -> f64 {
            let (s_, t_, e_) = (s as f64, t as f64, e as f64);
            let left: f64 = self.0[s..t].iter().sum();
            let right: f64 = self.0[t..e].iter().sum();
            ((e_ - t_) / ((e_ - s_) * (t_ - s_))).sqrt() * left
                - ((t_ - s_) / ((e_ - s_) * (e_ - t_))).sqrt() * right
        }

        fn best_split(&self, m: usize, w: &ScanWindow) -> (usize, f64) {
            let mut best = (w.t_lo, f64::NEG_INFINITY);
            for t in w.t_lo..=w.t_hi {
                let v = self.score(m, w.s, t, w.e).abs();
                if v > best.1 {
                    best = (t, v);
                }
            }
            best
        }
    }

    struct Zero;
    impl ScanScore for Zero {
        fn score(&self, _: usize, _: usize, _: usize, _: usize) -> f64 {
            0.0
        }
    }

    fn cover(len: usize) -> RandomIntervalSet {
        RandomIntervalSet::from_intervals(vec![Interval::new(1, len).unwrap()]).unwrap()
    }

    #[test]
    fn zero_score_never_fires() {
        let out = wbs_scan(20, &Zero, &cover(20), 1e-9, &IdentityTrim).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn noiseless_step_declares_first_index_of_new_segment() {
        let x = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let out = wbs_scan(6, &Cusum(&x), &cover(6), 0.5, &IdentityTrim).unwrap();
        assert_eq!(out.as_slice(), &[4]);
    }

    #[test]
    fn trims() {
        assert_eq!(IdentityTrim.window(3, 4), None);
        assert_eq!(
            IdentityTrim.window(3, 5),
            Some(ScanWindow { s: 3, e: 5, t_lo: 4, t_hi: 4 })
        );
        let w = FractionTrim { denominator: 64.0 }.window(0, 128).unwrap();
        assert_eq!((w.s, w.e), (2, 126));
        assert_eq!(FractionTrim { denominator: 64.0 }.window(0, 2), None);
        let w = MarginTrim { margin: 2.5 }.window(10, 20).unwrap();
        assert_eq!((w.t_lo, w.t_hi), (13, 17));
        assert_eq!(MarginTrim { margin: 5.0 }.window(10, 20), None);
    }

    #[test]
    fn output_structure() {
        let x: Vec<f64> = (0..60).map(|i| ((i / 15) % 2) as f64 * 3.0).collect();
        let ivs = crate::engine::sample_intervals(60, 80, None, 4).unwrap();
        let out = wbs_scan(60, &Cusum(&x), &ivs, 0.5, &IdentityTrim).unwrap();
        assert!(out.as_slice().windows(2).all(|w| w[0] < w[1]));
        assert!(out.iter().all(|&p| (2..=60).contains(&p)));
        assert!(out.len() <= ivs.len());
        assert_eq!(out.as_slice(), &[16, 31, 46]);
    }

    #[test]
    fn rejects_nonpositive_threshold() {
        assert!(wbs_scan(6, &Zero, &cover(6), 0.0, &IdentityTrim).is_err());
    }
}
