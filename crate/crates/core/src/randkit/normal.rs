//! Standard normal special functions.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;

use crate::error::{ensure_finite, ArocError, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF. Infinite arguments map to 0 or 1; NaN propagates.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)`, accurate for large positive `x`.
#[inline]
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

pub fn checked_std_normal_cdf(x: f64) -> Result<f64> {
    ensure_finite("std_normal_cdf argument", x)?;
    Ok(std_normal_cdf(x))
}

#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Log density of N(mean, variance) at `y`.
#[inline]
pub fn ln_normal_pdf(y: f64, mean: f64, variance: f64) -> f64 {
    let r = y - mean;
    -LN_SQRT_2PI - 0.5 * variance.ln() - 0.5 * r * r / variance
}

/// CDF of N(mean, variance) at `y`.
#[inline]
pub fn normal_cdf(y: f64, mean: f64, sd: f64) -> f64 {
    std_normal_cdf((y - mean) / sd)
}

/// Inverse of the standard normal CDF.
///
/// Acklam's rational approximation (relative error below 1.2e-9) followed by
/// one Newton correction against the erfc-based CDF.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(ArocError::invalid(format!(
            "normal quantile requires 0 < p < 1, got {p}"
        )));
    }
    Ok(quantile_unchecked(p))
}

fn quantile_unchecked(p: f64) -> f64 {
    if p > 0.5 {
        // upper half by symmetry; the lower tail of erfc is the accurate one
        return -quantile_unchecked(1.0 - p);
    }
    let x = acklam(p);
    let err = std_normal_cdf(x) - p;
    let dens = std_normal_pdf(x);
    if dens > 0.0 {
        x - err / dens
    } else {
        x
    }
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// `ln(Σ exp(v))` with max-shift; returns -inf for an empty or all -inf input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// erf by its Maclaurin series, summed until terms vanish. Only used for
    /// moderate |x| where the alternating series is well conditioned.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -x * x / n;
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        2.0 / PI.sqrt() * sum
    }

    #[test]
    fn cdf_at_zero_is_half() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
    }

    #[test]
    fn cdf_matches_series_oracle() {
        let x = 1.959964;
        let oracle = 0.5 * (1.0 + erf_series(x / 2f64.sqrt()));
        assert!(
            (std_normal_cdf(x) - oracle).abs() < 1e-12,
            "{}",
            std_normal_cdf(x) - oracle
        );
        assert!((std_normal_cdf(x) - 0.975).abs() < 1e-6);
        for &x in &[-2.5, -1.0, -0.3, 0.2, 0.7, 1.5, 2.2] {
            let oracle = 0.5 * (1.0 + erf_series(x / 2f64.sqrt()));
            assert!((std_normal_cdf(x) - oracle).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn cdf_symmetry() {
        for &x in &[0.1, 1.0, 3.0] {
            assert!((std_normal_cdf(x) + std_normal_cdf(-x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_rejects_non_finite_when_checked() {
        assert!(checked_std_normal_cdf(f64::NAN).is_err());
        assert!(checked_std_normal_cdf(f64::INFINITY).is_err());
        assert_eq!(std_normal_cdf(f64::INFINITY), 1.0);
        assert_eq!(std_normal_cdf(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn cdf_is_monotone_on_grid() {
        let mut prev = 0.0;
        for i in 0..=2000 {
            let x = -10.0 + 0.01 * i as f64;
            let v = std_normal_cdf(x);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn quantile_reference_values() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        // oracle: bisection on the CDF
        let (mut lo, mut hi) = (0.0f64, 5.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if std_normal_cdf(mid) < 0.975 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = std_normal_quantile(0.975).unwrap();
        assert!((q - lo).abs() < 1e-12);
        assert!((q - 1.959964).abs() < 1e-6);
    }

    #[test]
    fn quantile_roundtrip() {
        for &p in &[0.01, 0.3, 0.7, 0.99] {
            let x = std_normal_quantile(p).unwrap();
            assert!((std_normal_cdf(x) - p).abs() < 1e-9);
        }
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let x = std_normal_quantile(p).unwrap();
            assert!((std_normal_cdf(x) - p).abs() < 1e-9, "p = {p}");
        }
        let x = std_normal_quantile(1e-12).unwrap();
        assert!(((std_normal_cdf(x) - 1e-12) / 1e-12).abs() < 1e-9);
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        for &p in &[0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(std_normal_quantile(p).is_err());
        }
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[-1000.0, -1000.0]);
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
