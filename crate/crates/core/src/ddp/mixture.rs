use serde::{Deserialize, Serialize};

use crate::error::{ArocError, Result};
use crate::randkit::{ln_normal_pdf, log_sum_exp, std_normal_cdf, std_normal_pdf, std_normal_sf};

/// Finite mixture of normals `Σ ω_l N(μ_l, σ_l²)` at one covariate value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    weights: Vec<f64>,
    means: Vec<f64>,
    sds: Vec<f64>,
}

impl Mixture {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, sds: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(ArocError::EmptyInput("mixture components".into()));
        }
        if means.len() != weights.len() || sds.len() != weights.len() {
            return Err(ArocError::DimensionMismatch {
                context: "mixture components".into(),
                expected: weights.len(),
                found: means.len().min(sds.len()),
            });
        }
        let ok = weights.iter().all(|w| *w >= 0.0 && w.is_finite())
            && means.iter().all(|m| m.is_finite())
            && sds.iter().all(|s| *s > 0.0 && s.is_finite());
        if !ok {
            return Err(ArocError::invalid("mixture needs weights >= 0, finite means, sds > 0"));
        }
        Ok(Self { weights, means, sds })
    }

    pub fn single(mean: f64, sd: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![mean], vec![sd])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sds(&self) -> &[f64] {
        &self.sds
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.sds)
            .map(|((w, m), s)| (*w, *m, *s))
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.terms()
            .map(|(w, m, s)| w * std_normal_cdf((y - m) / s))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// Survival `1 − F(y)`, summed from upper tails for accuracy.
    pub fn sf(&self, y: f64) -> f64 {
        self.terms()
            .map(|(w, m, s)| w * std_normal_sf((y - m) / s))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.terms().map(|(w, m, s)| w * std_normal_pdf((y - m) / s) / s).sum()
    }

    pub fn ln_pdf(&self, y: f64) -> f64 {
        let terms: Vec<f64> = self
            .terms()
            .map(|(w, m, s)| w.ln() + ln_normal_pdf(y, m, s * s))
            .collect();
        log_sum_exp(&terms)
    }

    pub fn mean(&self) -> f64 {
        self.terms().map(|(w, m, _)| w * m).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.terms().map(|(w, m, s)| w * (s * s + (m - mu).powi(2))).sum()
    }

    /// Interval outside which the CDF is within about 1e-15 of 0 or 1.
    pub fn bracket(&self) -> (f64, f64) {
        let max_sd = self.sds.iter().copied().fold(0.0, f64::max);
        let lo = self.means.iter().copied().fold(f64::INFINITY, f64::min) - 8.0 * max_sd;
        let hi = self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 8.0 * max_sd;
        (lo, hi)
    }

    /// The `c` with `1 − F(c) = t`, by bisection on the survival function
    /// until the bracket cannot shrink further.
    pub fn upper_quantile(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Err(ArocError::invalid(format!(
                "false positive fraction must lie in (0, 1), got {t}"
            )));
        }
        let (mut lo, mut hi) = self.bracket();
        // widen if the 8σ rule is not enough for extreme t
        while self.sf(lo) < t {
            lo -= hi - lo;
        }
        while self.sf(hi) > t {
            hi += hi - lo;
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sf(mid) > t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}
