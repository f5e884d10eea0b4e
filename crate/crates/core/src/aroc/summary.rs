use serde::{Deserialize, Serialize};

use crate::error::{ArocError, Result};
use crate::splines::quantile_sorted;

/// Posterior (or bootstrap) mean with an equal-tailed percentile interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarEstimate {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ScalarEstimate {
    /// Ensemble mean and `(1 ± level) / 2` percentiles.
    pub fn from_ensemble(values: &[f64], level: f64) -> Result<Self> {
        check_level(level)?;
        if values.is_empty() {
            return Err(ArocError::EmptyInput("ensemble".into()));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let tail = 0.5 * (1.0 - level);
        Ok(Self {
            mean,
            lower: quantile_sorted(&sorted, tail),
            upper: quantile_sorted(&sorted, 1.0 - tail),
        })
    }
}

/// A curve over an FPF grid with a pointwise band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEstimate {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
}

impl CurveEstimate {
    /// Summarizes an ensemble given as one curve per row.
    pub fn from_ensemble(grid: &[f64], curves: &[Vec<f64>], level: f64) -> Result<Self> {
        check_level(level)?;
        if curves.is_empty() {
            return Err(ArocError::EmptyInput("curve ensemble".into()));
        }
        let mut est = Self {
            grid: grid.to_vec(),
            mean: Vec::with_capacity(grid.len()),
            lower: Vec::with_capacity(grid.len()),
            upper: Vec::with_capacity(grid.len()),
            level,
        };
        let mut column = vec![0.0; curves.len()];
        for k in 0..grid.len() {
            for (c, curve) in column.iter_mut().zip(curves) {
                *c = curve[k];
            }
            let s = ScalarEstimate::from_ensemble(&column, level)?;
            est.mean.push(s.mean);
            est.lower.push(s.lower);
            est.upper.push(s.upper);
        }
        Ok(est)
    }

    /// A curve without uncertainty (band collapsed onto the estimate).
    pub fn point(grid: &[f64], values: Vec<f64>) -> Self {
        Self {
            grid: grid.to_vec(),
            lower: values.clone(),
            upper: values.clone(),
            mean: values,
            level: 0.0,
        }
    }
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if !(0.0..1.0).contains(&level) {
        return Err(ArocError::invalid(format!(
            "credible level must lie in [0, 1), got {level}"
        )));
    }
    Ok(())
}

/// `n` evenly spaced points on `[0, 1]`.
pub fn fpf_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(ArocError::EmptyInput("FPF grid".into()));
    }
    if grid.iter().any(|t| !(0.0..=1.0).contains(t)) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(ArocError::invalid("FPF grid must be sorted and inside [0, 1]"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_summary() {
        let v: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        let s = ScalarEstimate::from_ensemble(&v, 0.95).unwrap();
        assert_eq!(s.mean, 50.0);
        assert!((s.lower - 2.5).abs() < 1e-12 && (s.upper - 97.5).abs() < 1e-12);
        assert!(ScalarEstimate::from_ensemble(&[], 0.95).is_err());
        assert!(ScalarEstimate::from_ensemble(&v, 1.0).is_err());
    }

    #[test]
    fn grid_checks() {
        let g = fpf_grid(101);
        assert_eq!(g.len(), 101);
        assert_eq!(g[100], 1.0);
        assert!((g[37] - 0.37).abs() < 1e-15);
        check_grid(&g).unwrap();
        assert!(check_grid(&[]).is_err());
        assert!(check_grid(&[0.5, 0.1]).is_err());
    }
}
