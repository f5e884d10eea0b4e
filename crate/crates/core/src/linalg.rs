use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{ArocError, Result};

pub(crate) type Chol = Cholesky<f64, Dyn>;

/// Cholesky factorization; on failure retries with a symmetric diagonal
/// jitter of `1e-10 * trace / q`, growing tenfold per attempt. Returns the
/// factor and the jitter that was needed (0 when none).
pub(crate) fn cholesky_with_jitter(m: &DMatrix<f64>, context: &str) -> Result<(Chol, f64)> {
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Ok((ch, 0.0));
    }
    let q = m.nrows().max(1) as f64;
    let trace = m.trace();
    let base = if trace.is_finite() && trace > 0.0 {
        1e-10 * trace / q
    } else {
        1e-10
    };
    let mut jitter = base;
    for _ in 0..8 {
        let mut shifted = m.clone();
        for i in 0..m.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(shifted) {
            return Ok((ch, jitter));
        }
        jitter *= 10.0;
    }
    Err(ArocError::NotPositiveDefinite(context.to_string()))
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub(crate) fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Inverse of a symmetric positive-definite matrix.
pub(crate) fn spd_inverse(m: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    let ch = Cholesky::new(m.clone()).ok_or_else(|| ArocError::NotPositiveDefinite(context.to_string()))?;
    let mut inv = ch.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}
