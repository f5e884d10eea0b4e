use crate::ddp::FitResult;
use crate::error::{ArocError, Result};

use super::summary::{check_level, ScalarEstimate};

/// Per-draw thresholds `c` with `1 − F_s(c | x) = t` for one covariate record.
pub fn threshold_draws(fit: &FitResult, record: &[f64], t: f64) -> Result<Vec<f64>> {
    if fit.draws.is_empty() {
        return Err(ArocError::EmptyInput("posterior draws".into()));
    }
    let z = fit.design.row(record)?;
    fit.draws.iter().map(|d| d.mixture_at(&z).upper_quantile(t)).collect()
}

/// Covariate-specific threshold at false positive fraction `t`: posterior
/// mean and equal-tailed interval.
pub fn covariate_threshold(fit: &FitResult, record: &[f64], t: f64, level: f64) -> Result<ScalarEstimate> {
    check_level(level)?;
    ScalarEstimate::from_ensemble(&threshold_draws(fit, record, t)?, level)
}
