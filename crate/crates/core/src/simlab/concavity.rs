//! Oracle comparison of the AROC and the pooled ROC for linear-normal
//! configurations with a normally distributed covariate.

use serde::{Deserialize, Serialize};

use crate::error::{ArocError, Result};
use crate::randkit::{normal_cdf, std_normal_pdf, std_normal_quantile};

/// `Y | X ~ N(intercept + slope·X, sd²)` with `X ~ N(covariate_mean, covariate_sd²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearNormalGroup {
    pub intercept: f64,
    pub slope: f64,
    pub sd: f64,
    pub covariate_mean: f64,
    pub covariate_sd: f64,
}

impl LinearNormalGroup {
    fn mean_at(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    fn validate(&self, label: &str) -> Result<()> {
        let ok = [self.intercept, self.slope, self.covariate_mean]
            .iter()
            .all(|v| v.is_finite())
            && self.sd > 0.0
            && self.sd.is_finite()
            && self.covariate_sd > 0.0
            && self.covariate_sd.is_finite();
        if !ok {
            return Err(ArocError::invalid(format!("{label} group parameters are not valid")));
        }
        Ok(())
    }

    /// `∫ f(x) dH(x)` by composite Simpson over ±10 covariate SDs.
    fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        const INTERVALS: usize = 2000;
        let lo = self.covariate_mean - 10.0 * self.covariate_sd;
        let h = 20.0 * self.covariate_sd / INTERVALS as f64;
        let mut acc = 0.0;
        for i in 0..=INTERVALS {
            let x = lo + h * i as f64;
            let w = if i == 0 || i == INTERVALS {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let dens = std_normal_pdf((x - self.covariate_mean) / self.covariate_sd) / self.covariate_sd;
            acc += w * dens * f(x);
        }
        acc * h / 3.0
    }

    /// Marginal CDF of `Y`.
    fn marginal_cdf(&self, y: f64) -> f64 {
        self.expect(|x| normal_cdf(y, self.mean_at(x), self.sd)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearNormalConfig {
    pub nondiseased: LinearNormalGroup,
    pub diseased: LinearNormalGroup,
}

impl LinearNormalConfig {
    fn build(y0: (f64, f64), y1: (f64, f64), sd: f64, x0: (f64, f64), x1: (f64, f64)) -> Self {
        Self {
            nondiseased: LinearNormalGroup {
                intercept: y0.0,
                slope: y0.1,
                sd,
                covariate_mean: x0.0,
                covariate_sd: x0.1,
            },
            diseased: LinearNormalGroup {
                intercept: y1.0,
                slope: y1.1,
                sd,
                covariate_mean: x1.0,
                covariate_sd: x1.1,
            },
        }
    }

    /// No association: `N(0.5, 0.3²)` vs `N(1, 0.3²)`.
    pub fn no_association() -> Self {
        Self::build((0.5, 0.0), (1.0, 0.0), 0.3, (0.0, 0.15), (0.0, 0.15))
    }

    /// Association without effect on accuracy, same covariate law:
    /// `N(0.5 + X, 0.3²)` vs `N(0.75 + X, 0.3²)`, `X ~ N(0, 0.15²)`.
    pub fn association_equal_laws() -> Self {
        Self::build((0.5, 1.0), (0.75, 1.0), 0.3, (0.0, 0.15), (0.0, 0.15))
    }

    /// Covariate-dependent accuracy, same covariate law:
    /// `N(0.25 + 0.5X, 0.3²)` vs `N(0.75 + X, 0.3²)`.
    pub fn effect_equal_laws() -> Self {
        Self::build((0.25, 0.5), (0.75, 1.0), 0.3, (0.0, 0.15), (0.0, 0.15))
    }

    fn validate(&self) -> Result<()> {
        self.nondiseased.validate("nondiseased")?;
        self.diseased.validate("diseased")
    }

    /// `AROC(t) = E_{X_D}[1 − F_D(F_D̄⁻¹(1 − t | X) | X)]`.
    pub fn true_aroc(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        self.validate()?;
        if t == 0.0 || t == 1.0 {
            return Ok(t);
        }
        let z = std_normal_quantile(t)?;
        let (g0, g1) = (&self.nondiseased, &self.diseased);
        Ok(g1.expect(|x| {
            let threshold = g0.mean_at(x) - g0.sd * z;
            1.0 - normal_cdf(threshold, g1.mean_at(x), g1.sd)
        }))
    }

    /// Pooled ROC `1 − F_D(c_t)` with `1 − F_D̄(c_t) = t`, both marginals by
    /// quadrature and `c_t` by bisection.
    pub fn pooled_roc(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        self.validate()?;
        if t == 0.0 || t == 1.0 {
            return Ok(t);
        }
        let g0 = &self.nondiseased;
        let centre = g0.intercept + g0.slope * g0.covariate_mean;
        let spread = g0.sd + g0.slope.abs() * g0.covariate_sd;
        let (mut lo, mut hi) = (centre - 40.0 * spread, centre + 40.0 * spread);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if 1.0 - g0.marginal_cdf(mid) > t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(1.0 - self.diseased.marginal_cdf(0.5 * (lo + hi)))
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(ArocError::invalid(format!("FPF must lie in [0, 1], got {t}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    pub grid: Vec<f64>,
    pub aroc: Vec<f64>,
    pub pooled: Vec<f64>,
    /// `min_t (AROC(t) − ROC(t))`.
    pub min_margin: f64,
    pub max_abs_diff: f64,
    /// `AROC(t) ≥ ROC(t) − tolerance` at every grid point.
    pub holds: bool,
    pub tolerance: f64,
}

/// Evaluates both oracle curves on `grid` and checks `AROC ≥ ROC − tolerance`.
/// Requires the two groups to share the covariate law.
pub fn concavity_inequality_check(
    config: &LinearNormalConfig,
    grid: &[f64],
    tolerance: f64,
) -> Result<ConcavityReport> {
    let (g0, g1) = (&config.nondiseased, &config.diseased);
    if g0.covariate_mean != g1.covariate_mean || g0.covariate_sd != g1.covariate_sd {
        return Err(ArocError::invalid(
            "the inequality check needs the same covariate law in both groups",
        ));
    }
    let aroc = grid.iter().map(|&t| config.true_aroc(t)).collect::<Result<Vec<_>>>()?;
    let pooled = grid.iter().map(|&t| config.pooled_roc(t)).collect::<Result<Vec<_>>>()?;
    let diffs: Vec<f64> = aroc.iter().zip(&pooled).map(|(a, p)| a - p).collect();
    let min_margin = diffs.iter().copied().fold(f64::INFINITY, f64::min);
    let max_abs_diff = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    Ok(ConcavityReport {
        grid: grid.to_vec(),
        holds: diffs.iter().all(|d| *d >= -tolerance),
        aroc,
        pooled,
        min_margin,
        max_abs_diff,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aroc::fpf_grid;
    use crate::randkit::std_normal_cdf;

    /// Closed forms: with a normal covariate the marginals are normal, and
    /// when slopes agree every covariate-specific curve is the same binormal.
    fn binormal(d: f64, s0: f64, s1: f64, t: f64) -> f64 {
        std_normal_cdf((d + s0 * std_normal_quantile(t).unwrap()) / s1)
    }

    #[test]
    fn matches_closed_forms() {
        let c = LinearNormalConfig::association_equal_laws();
        let m0 = (0.3f64.powi(2) + 0.15f64.powi(2)).sqrt();
        for t in [0.01, 0.2, 0.5, 0.9] {
            let aroc = c.true_aroc(t).unwrap();
            assert!((aroc - binormal(0.25, 0.3, 0.3, t)).abs() < 1e-10, "t = {t}");
            let pooled = c.pooled_roc(t).unwrap();
            assert!((pooled - binormal(0.25, m0, m0, t)).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn association_config_attenuates_pooled_curve() {
        let grid = fpf_grid(101);
        let r = concavity_inequality_check(&LinearNormalConfig::association_equal_laws(), &grid, 1e-3).unwrap();
        assert!(r.holds);
        assert!(r.min_margin >= 0.0);
        assert!(r.max_abs_diff > 0.01);
        assert_eq!(r.aroc[0], r.pooled[0]);
        assert_eq!(r.aroc[100], r.pooled[100]);
        let e = concavity_inequality_check(&LinearNormalConfig::effect_equal_laws(), &grid, 1e-3).unwrap();
        assert!(e.holds);
    }

    #[test]
    fn no_association_curves_coincide() {
        let grid = fpf_grid(101);
        let r = concavity_inequality_check(&LinearNormalConfig::no_association(), &grid, 1e-3).unwrap();
        assert!(r.max_abs_diff < 2e-3, "{}", r.max_abs_diff);
    }

    #[test]
    fn rejects_unequal_covariate_laws() {
        let mut c = LinearNormalConfig::association_equal_laws();
        c.diseased.covariate_mean = 0.4;
        assert!(concavity_inequality_check(&c, &[0.5], 1e-3).is_err());
        assert!(c.true_aroc(0.5).is_ok());
    }
}
