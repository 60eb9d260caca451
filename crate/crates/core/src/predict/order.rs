//! Singular-value diagnostics of the past Hankel matrix.

use crate::error::{Error, Result};

/// Smallest ratio between consecutive singular values accepted as a rank gap.
pub const ORDER_MIN_GAP: f64 = 10.0;

/// `σ_max(Σ2)² / σ_min(Σ1)²`; zero when there is no residual part.
pub fn sensitivity_index(sigma1: &[f64], sigma2: &[f64]) -> Result<f64> {
    let smin = match sigma1.iter().copied().reduce(f64::min) {
        Some(v) => v,
        None => return Err(Error::Argument("signal singular values are empty".into())),
    };
    if smin.is_nan() || smin <= 0.0 {
        return Err(Error::Argument("smallest signal singular value is not positive".into()));
    }
    let smax2 = sigma2.iter().copied().fold(0.0f64, f64::max);
    Ok((smax2 / smin) * (smax2 / smin))
}

/// Number of singular values before the dominant gap, considering only
/// gaps whose lower value lies below `floor_ratio · σ_1`. `None` when no
/// such gap reaches [`ORDER_MIN_GAP`].
pub fn estimate_order(sigma: &[f64], floor_ratio: f64) -> Option<usize> {
    let s1 = *sigma.first()?;
    if s1.is_nan() || s1 <= 0.0 {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 0..sigma.len().saturating_sub(1) {
        let (hi, lo) = (sigma[i], sigma[i + 1]);
        if lo / s1 >= floor_ratio || hi <= 0.0 {
            continue;
        }
        let gap = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if best.is_none_or(|(_, g)| gap > g) {
            best = Some((i + 1, gap));
        }
    }
    match best {
        Some((k, g)) if g >= ORDER_MIN_GAP => Some(k),
        _ => None,
    }
}
