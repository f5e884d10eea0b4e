use crate::aroc::CurveEstimate;
use crate::error::{ArocError, Result};

use super::truth::TrueCurve;

/// `√(n_T⁻¹ Σ_r (Â(t_r) − A(t_r))²)` over the shared grid.
pub fn ermse(estimate: &CurveEstimate, truth: &TrueCurve) -> Result<f64> {
    truth.check_estimate(estimate)?;
    ermse_values(&estimate.mean, &truth.values)
}

/// ERMSE of two curves given as values on the same grid.
pub fn ermse_values(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(ArocError::GridMismatch(format!(
            "{} estimate points vs {} truth points",
            estimate.len(),
            truth.len()
        )));
    }
    if estimate.is_empty() {
        return Err(ArocError::EmptyInput("curve".into()));
    }
    let ss: f64 = estimate.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((ss / estimate.len() as f64).sqrt())
}

/// Per-grid-point indicator that the truth lies in the closed band.
pub fn band_coverage(estimate: &CurveEstimate, truth: &TrueCurve) -> Result<Vec<bool>> {
    truth.check_estimate(estimate)?;
    Ok(estimate
        .lower
        .iter()
        .zip(&estimate.upper)
        .zip(&truth.values)
        .map(|((lo, hi), v)| lo <= v && v <= hi)
        .collect())
}

/// Share of grid points covered, in `[0, 1]`.
pub fn coverage_fraction(indicators: &[bool]) -> f64 {
    if indicators.is_empty() {
        return 0.0;
    }
    indicators.iter().filter(|b| **b).count() as f64 / indicators.len() as f64
}

pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (m, 0.0);
    }
    let v = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (m, v.sqrt())
}
