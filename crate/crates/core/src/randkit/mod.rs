//! Seedable random streams, samplers, and normal special functions.

mod normal;
mod sample;
mod stream;

use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{ArocError, Result};

pub use normal::{
    checked_std_normal_cdf, ln_normal_pdf, log_sum_exp, normal_cdf, std_normal_cdf, std_normal_pdf,
    std_normal_quantile, std_normal_sf,
};
pub(crate) use sample::sample_mvn_canonical;
pub use sample::{
    sample_bernoulli, sample_beta, sample_categorical_log, sample_dirichlet, sample_flat_dirichlet, sample_gamma,
    sample_multinomial, sample_multivariate_normal, sample_normal, sample_skew_normal, sample_std_normal,
    sample_wishart,
};
pub use stream::RngStream;

/// Skew-normal law given by its mean, variance and Azzalini shape `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewNormalParams {
    mean: f64,
    variance: f64,
    shape: f64,
}

impl SkewNormalParams {
    pub fn new(mean: f64, variance: f64, shape: f64) -> Result<Self> {
        if !mean.is_finite() || !shape.is_finite() || !(variance > 0.0) || !variance.is_finite() {
            return Err(ArocError::invalid(format!(
                "skew normal needs finite mean/shape and variance > 0, got ({mean}, {variance}, {shape})"
            )));
        }
        Ok(Self { mean, variance, shape })
    }

    /// From the direct parameters: location ξ, scale ω and shape λ, i.e.
    /// density `2/ω φ((x−ξ)/ω) Φ(λ(x−ξ)/ω)`.
    pub fn from_direct(location: f64, scale: f64, shape: f64) -> Result<Self> {
        if !location.is_finite() || !shape.is_finite() || !(scale > 0.0) || !scale.is_finite() {
            return Err(ArocError::invalid(format!(
                "skew normal needs finite location/shape and scale > 0, got ({location}, {scale}, {shape})"
            )));
        }
        let d = shape / (1.0 + shape * shape).sqrt();
        Self::new(
            location + scale * d * FRAC_2_PI.sqrt(),
            scale * scale * (1.0 - FRAC_2_PI * d * d),
            shape,
        )
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn delta(&self) -> f64 {
        self.shape / (1.0 + self.shape * self.shape).sqrt()
    }

    /// Scale ω with ω² = σ² / (1 − 2δ²/π).
    pub fn scale(&self) -> f64 {
        let d = self.delta();
        (self.variance / (1.0 - FRAC_2_PI * d * d)).sqrt()
    }

    /// Location ξ = μ − ωδ√(2/π).
    pub fn location(&self) -> f64 {
        self.mean - self.scale() * self.delta() * FRAC_2_PI.sqrt()
    }

    /// Population skewness coefficient.
    pub fn skewness(&self) -> f64 {
        let d = self.delta();
        let b = d * (2.0 / PI).sqrt();
        0.5 * (4.0 - PI) * b.powi(3) / (1.0 - b * b).powf(1.5)
    }
}
