use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1, Gamma, StandardNormal};

use crate::error::{ArocError, Result};
use crate::linalg::{is_symmetric, spd_inverse, Chol};

use super::SkewNormalParams;

#[inline]
pub fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> Result<f64> {
    if !(sd >= 0.0) || !sd.is_finite() || !mean.is_finite() {
        return Err(ArocError::invalid(format!(
            "normal requires finite mean and sd >= 0, got ({mean}, {sd})"
        )));
    }
    Ok(mean + sd * sample_std_normal(rng))
}

/// Gamma with shape/rate parametrization (mean = shape / rate).
pub fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
        return Err(ArocError::invalid(format!(
            "gamma requires shape, rate > 0, got ({shape}, {rate})"
        )));
    }
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| ArocError::invalid(e.to_string()))?;
    Ok(g.sample(rng))
}

pub fn sample_beta<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(ArocError::invalid(format!("beta requires a, b > 0, got ({a}, {b})")));
    }
    let d = Beta::new(a, b).map_err(|e| ArocError::invalid(e.to_string()))?;
    Ok(d.sample(rng))
}

pub fn sample_bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ArocError::invalid(format!("bernoulli requires p in [0, 1], got {p}")));
    }
    Ok(rng.random::<f64>() < p)
}

/// One categorical draw from unnormalized log-weights. Entries equal to
/// -inf are never selected.
pub fn sample_categorical_log<R: Rng + ?Sized>(rng: &mut R, log_weights: &[f64]) -> Result<usize> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(ArocError::invalid("categorical draw with no finite log-weight"));
    }
    let total: f64 = log_weights.iter().map(|w| (w - max).exp()).sum();
    let mut u = rng.random::<f64>() * total;
    let mut last_positive = 0;
    for (k, w) in log_weights.iter().enumerate() {
        let p = (w - max).exp();
        if p > 0.0 {
            last_positive = k;
            if u < p {
                return Ok(k);
            }
            u -= p;
        }
    }
    Ok(last_positive)
}

/// Multinomial counts for `trials` draws with the given probabilities.
pub fn sample_multinomial<R: Rng + ?Sized>(rng: &mut R, trials: usize, probs: &[f64]) -> Result<Vec<usize>> {
    if probs.is_empty() || probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(ArocError::invalid(
            "multinomial probabilities must be finite and nonnegative",
        ));
    }
    let logs: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
    let mut counts = vec![0usize; probs.len()];
    for _ in 0..trials {
        counts[sample_categorical_log(rng, &logs)?] += 1;
    }
    Ok(counts)
}

/// Dirichlet draw via normalized gamma variates.
pub fn sample_dirichlet<R: Rng + ?Sized>(rng: &mut R, concentration: &[f64]) -> Result<Vec<f64>> {
    if concentration.is_empty() {
        return Err(ArocError::EmptyInput("dirichlet concentration".into()));
    }
    if let Some(bad) = concentration.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
        return Err(ArocError::invalid(format!(
            "dirichlet concentration must be positive, got {bad}"
        )));
    }
    let mut draws = Vec::with_capacity(concentration.len());
    for &a in concentration {
        draws.push(sample_gamma(rng, a, 1.0)?);
    }
    normalize_in_place(&mut draws);
    Ok(draws)
}

/// Flat Dirichlet(1, ..., 1) of length `n`, the Bayesian-bootstrap weights.
pub fn sample_flat_dirichlet<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    normalize_in_place(&mut draws);
    draws
}

fn normalize_in_place(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    } else {
        // every gamma variate underflowed; only possible for tiny shapes
        let n = v.len() as f64;
        v.iter_mut().for_each(|x| *x = 1.0 / n);
    }
}

/// Wishart draw `W(df, inverse_scale⁻¹)`, whose mean is `df * inverse_scale⁻¹`.
///
/// Taking the inverse scale matches how the sampler's hyperparameter
/// update is stated: `W(ν, (νΨ)⁻¹)` is called with `νΨ`. Uses the Bartlett
/// decomposition.
pub fn sample_wishart<R: Rng + ?Sized>(rng: &mut R, df: f64, inverse_scale: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = inverse_scale.nrows();
    if p == 0 || inverse_scale.ncols() != p {
        return Err(ArocError::invalid("wishart scale must be a nonempty square matrix"));
    }
    if !(df > (p as f64) - 1.0) || !df.is_finite() {
        return Err(ArocError::invalid(format!(
            "wishart df {df} must exceed dimension - 1 = {}",
            p - 1
        )));
    }
    if !is_symmetric(inverse_scale, 1e-10) {
        return Err(ArocError::NotPositiveDefinite("wishart scale is not symmetric".into()));
    }
    let scale = spd_inverse(inverse_scale, "wishart scale")?;
    let l = nalgebra::Cholesky::new(scale)
        .ok_or_else(|| ArocError::NotPositiveDefinite("wishart scale".into()))?
        .l();
    let mut bartlett = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let chi2 = 2.0 * sample_gamma(rng, 0.5 * (df - i as f64), 1.0)?;
        bartlett[(i, i)] = chi2.sqrt();
        for j in 0..i {
            bartlett[(i, j)] = sample_std_normal(rng);
        }
    }
    let la = l * bartlett;
    let mut w = &la * la.transpose();
    crate::linalg::symmetrize(&mut w);
    Ok(w)
}

/// Multivariate normal draw from a mean and covariance matrix.
pub fn sample_multivariate_normal<R: Rng + ?Sized>(
    rng: &mut R,
    mean: &DVector<f64>,
    covariance: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let q = mean.len();
    if covariance.nrows() != q || covariance.ncols() != q {
        return Err(ArocError::DimensionMismatch {
            context: "multivariate normal covariance".into(),
            expected: q,
            found: covariance.nrows(),
        });
    }
    let l = nalgebra::Cholesky::new(covariance.clone())
        .ok_or_else(|| ArocError::NotPositiveDefinite("multivariate normal covariance".into()))?
        .l();
    let xi = DVector::from_fn(q, |_, _| sample_std_normal(rng));
    Ok(mean + l * xi)
}

/// Draw from `N(P⁻¹ b, P⁻¹)` given the Cholesky factor of the precision `P`.
pub(crate) fn sample_mvn_canonical<R: Rng + ?Sized>(
    rng: &mut R,
    precision: &Chol,
    linear: &DVector<f64>,
) -> DVector<f64> {
    let q = linear.len();
    let mean = precision.solve(linear);
    let xi = DVector::from_fn(q, |_, _| sample_std_normal(rng));
    // L⁻ᵀ ξ has covariance (L Lᵀ)⁻¹ = P⁻¹
    let noise = precision.l_dirty().tr_solve_lower_triangular(&xi).unwrap_or(xi);
    mean + noise
}

/// Skew-normal draw with the mean/variance/shape parametrization.
pub fn sample_skew_normal<R: Rng + ?Sized>(rng: &mut R, params: &SkewNormalParams) -> f64 {
    let delta = params.delta();
    let u0: f64 = sample_std_normal(rng);
    let v: f64 = sample_std_normal(rng);
    let u1 = delta * u0.abs() + (1.0 - delta * delta).sqrt() * v;
    params.location() + params.scale() * u1
}
