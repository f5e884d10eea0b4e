use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::ddp::FitResult;
use crate::error::{ArocError, Result};

/// Placement values `U[s][j] = 1 − F_s(y_j | x_j)` of diseased outcomes
/// under each retained draw `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementMatrix {
    values: Vec<f64>,
    draws: usize,
    subjects: usize,
    /// Diseased records whose spline arguments fell outside the knot range.
    pub clamped_records: usize,
}

impl PlacementMatrix {
    /// Builds from row-major values, one row per draw.
    pub fn new(values: Vec<f64>, draws: usize, subjects: usize) -> Result<Self> {
        if values.len() != draws * subjects {
            return Err(ArocError::DimensionMismatch {
                context: "placement matrix".into(),
                expected: draws * subjects,
                found: values.len(),
            });
        }
        if draws == 0 || subjects == 0 {
            return Err(ArocError::EmptyInput("placement matrix".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ArocError::invalid(format!("placement value {v} outside [0, 1]")));
        }
        Ok(Self {
            values,
            draws,
            subjects,
            clamped_records: 0,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let subjects = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != subjects) {
            return Err(ArocError::invalid("placement rows have unequal lengths"));
        }
        Self::new(rows.concat(), rows.len(), subjects)
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn subjects(&self) -> usize {
        self.subjects
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.subjects..(s + 1) * self.subjects]
    }

    /// Placement values averaged over draws, one per subject.
    pub fn subject_means(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.subjects];
        for s in 0..self.draws {
            for (o, u) in out.iter_mut().zip(self.row(s)) {
                *o += u;
            }
        }
        out.iter_mut().for_each(|o| *o /= self.draws as f64);
        out
    }
}

/// Placement values of the diseased sample under every draw of `fit`.
pub fn placement_values(fit: &FitResult, diseased: &Sample) -> Result<PlacementMatrix> {
    if fit.draws.is_empty() {
        return Err(ArocError::EmptyInput("posterior draws".into()));
    }
    if diseased.is_empty() {
        return Err(ArocError::EmptyInput("diseased sample".into()));
    }
    let (rows, clamped) = fit.design.rows(diseased)?;
    let y = diseased.y();
    let mut values = Vec::with_capacity(fit.draws.len() * y.len());
    for draw in &fit.draws {
        for (z, &yj) in rows.iter().zip(y) {
            values.push(draw.mixture_at(z).sf(yj));
        }
    }
    let mut pm = PlacementMatrix::new(values, fit.draws.len(), y.len())?;
    pm.clamped_records = clamped;
    Ok(pm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(PlacementMatrix::new(vec![0.1, 0.2], 1, 3).is_err());
        assert!(PlacementMatrix::new(vec![0.1, 1.2], 1, 2).is_err());
        assert!(PlacementMatrix::from_rows(&[vec![0.1], vec![0.2, 0.3]]).is_err());
        let p = PlacementMatrix::from_rows(&[vec![0.1, 0.3], vec![0.3, 0.5]]).unwrap();
        assert_eq!(p.row(1), &[0.3, 0.5]);
        let m = p.subject_means();
        assert!((m[0] - 0.2).abs() < 1e-15 && (m[1] - 0.4).abs() < 1e-15);
    }
}
