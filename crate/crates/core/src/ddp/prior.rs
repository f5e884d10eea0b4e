use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ArocError, Result};
use crate::linalg::is_symmetric;

/// Hyperparameters of the truncated DDP mixture with conjugate base measure
/// `β_l ~ N(m, S)`, `σ_l⁻² ~ Γ(a, b)`, `m ~ N(m0, S0)`, `S⁻¹ ~ W(ν, (νΨ)⁻¹)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub m0: DVector<f64>,
    pub s0: DMatrix<f64>,
    pub nu: f64,
    pub psi: DMatrix<f64>,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    /// Truncation level L (number of mixture components).
    pub components: usize,
}

impl PriorSpec {
    /// Defaults for responses scaled to unit SD: `m0 = 0`, `S0 = 100 I`,
    /// `ν = Q + 2`, `Ψ = I`, `a = 2`, `b = 0.5`, `α = 1`.
    pub fn standard(q: usize, components: usize) -> Self {
        Self {
            m0: DVector::zeros(q),
            s0: DMatrix::identity(q, q) * 100.0,
            nu: q as f64 + 2.0,
            psi: DMatrix::identity(q, q),
            a: 2.0,
            b: 0.5,
            alpha: 1.0,
            components,
        }
    }

    pub fn dim(&self) -> usize {
        self.m0.len()
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.dim();
        if q == 0 {
            return Err(ArocError::invalid("prior dimension must be positive"));
        }
        for (name, m) in [("S0", &self.s0), ("Psi", &self.psi)] {
            if m.nrows() != q || m.ncols() != q {
                return Err(ArocError::DimensionMismatch {
                    context: format!("prior {name}"),
                    expected: q,
                    found: m.nrows(),
                });
            }
            if !is_symmetric(m, 1e-12) || nalgebra::Cholesky::new(m.clone()).is_none() {
                return Err(ArocError::NotPositiveDefinite(format!("prior {name}")));
            }
        }
        if !(self.nu >= q as f64) {
            return Err(ArocError::invalid(format!(
                "prior nu = {} must be at least Q = {q}",
                self.nu
            )));
        }
        if !(self.a > 0.0 && self.b > 0.0 && self.alpha > 0.0) {
            return Err(ArocError::invalid("prior a, b, alpha must be positive"));
        }
        if self.components == 0 {
            return Err(ArocError::invalid("at least one mixture component is required"));
        }
        Ok(())
    }
}

/// Expected prior mass beyond the first `L` sticks, `(α / (1 + α))^L`.
pub fn truncation_bound(alpha: f64, l: usize) -> Result<f64> {
    if !(alpha > 0.0) || l == 0 {
        return Err(ArocError::invalid("truncation bound needs alpha > 0 and L >= 1"));
    }
    Ok((alpha / (1.0 + alpha)).powi(l as i32))
}

/// Prior expected number of occupied clusters among `n` draws,
/// `Σ_{i=1}^{n} α / (α + i − 1)`.
pub fn prior_expected_clusters(alpha: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0) || n == 0 {
        return Err(ArocError::invalid("expected clusters needs alpha > 0 and n >= 1"));
    }
    Ok((1..=n).map(|i| alpha / (alpha + i as f64 - 1.0)).sum())
}
