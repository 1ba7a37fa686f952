use crate::error::{Error, Result};

const MAD_CONSISTENCY: f64 = 0.6745;
const FLOOR: f64 = 1e-12;

/// Robust noise scale from first differences:
/// `median |x_{t+1} - x_t| / (sqrt(2) * 0.6745)`, floored at `1e-12`.
pub fn estimate_noise_scale(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::invalid(format!(
            "noise scale needs at least 2 observations, got {}",
            x.len()
        )));
    }
    let mut diffs: Vec<f64> = x.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let median = median_in_place(&mut diffs);
    let scale = median / (std::f64::consts::SQRT_2 * MAD_CONSISTENCY);
    Ok(if scale > 0.0 { scale } else { FLOOR })
}

pub(crate) fn median_in_place(v: &mut [f64]) -> f64 {
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
