use serde::{Deserialize, Serialize};

use crate::error::{ArocError, Result};
use crate::randkit::{sample_flat_dirichlet, RngStream};

use super::bootstrap::{aauc, weighted_step_curve};
use super::summary::{check_grid, check_level, CurveEstimate, ScalarEstimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledEstimate {
    pub curve: CurveEstimate,
    pub auc: ScalarEstimate,
}

fn check_samples(y0: &[f64], y1: &[f64]) -> Result<()> {
    if y0.is_empty() || y1.is_empty() {
        return Err(ArocError::EmptyInput("pooled ROC samples".into()));
    }
    if let Some(v) = y0.iter().chain(y1).find(|v| !v.is_finite()) {
        return Err(ArocError::NonFinite {
            what: "pooled ROC samples".into(),
            value: *v,
        });
    }
    Ok(())
}

/// Bayesian-bootstrap pooled ROC: per iterate, independent flat Dirichlet
/// weights `p` (nondiseased) and `q` (diseased), placement values from the
/// `p`-weighted empirical survival function, then the `q`-weighted step
/// curve and `AUC = 1 − Σ q_j U_j`.
pub fn pooled_roc_bb(
    y_nondiseased: &[f64],
    y_diseased: &[f64],
    grid: &[f64],
    iterations: usize,
    level: f64,
    rng: &mut RngStream,
) -> Result<PooledEstimate> {
    check_samples(y_nondiseased, y_diseased)?;
    check_grid(grid)?;
    check_level(level)?;
    if iterations == 0 {
        return Err(ArocError::invalid("at least one bootstrap iterate is required"));
    }
    let mut order: Vec<usize> = (0..y_nondiseased.len()).collect();
    order.sort_by(|&a, &b| y_nondiseased[a].total_cmp(&y_nondiseased[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| y_nondiseased[i]).collect();
    // rank[j] = number of nondiseased outcomes <= y_diseased[j]
    let rank: Vec<usize> = y_diseased.iter().map(|y| sorted.partition_point(|v| v <= y)).collect();
    let mut curves = Vec::with_capacity(iterations);
    let mut aucs = Vec::with_capacity(iterations);
    let mut cum = vec![0.0; sorted.len() + 1];
    for _ in 0..iterations {
        let p = sample_flat_dirichlet(rng, sorted.len());
        for (k, &i) in order.iter().enumerate() {
            cum[k + 1] = cum[k] + p[i];
        }
        let total = cum[sorted.len()];
        let u: Vec<f64> = rank
            .iter()
            .map(|&r| ((total - cum[r]) / total).clamp(0.0, 1.0))
            .collect();
        let q = sample_flat_dirichlet(rng, u.len());
        curves.push(weighted_step_curve(&q, &u, grid));
        aucs.push(aauc(&q, &u));
    }
    Ok(PooledEstimate {
        curve: CurveEstimate::from_ensemble(grid, &curves, level)?,
        auc: ScalarEstimate::from_ensemble(&aucs, level)?,
    })
}

/// Empirical pooled ROC `1 − F̂_D(F̂_D̄⁻¹(1 − t))`, where
/// `F̂⁻¹(p) = inf{y : F̂(y) ≥ p}` and `F̂⁻¹(0) = −∞`.
pub fn pooled_roc_emp(y_nondiseased: &[f64], y_diseased: &[f64], grid: &[f64]) -> Result<CurveEstimate> {
    check_samples(y_nondiseased, y_diseased)?;
    check_grid(grid)?;
    let mut y0 = y_nondiseased.to_vec();
    y0.sort_by(f64::total_cmp);
    let mut y1 = y_diseased.to_vec();
    y1.sort_by(f64::total_cmp);
    let n0 = y0.len() as f64;
    let n1 = y1.len() as f64;
    let values = grid
        .iter()
        .map(|&t| {
            let p = 1.0 - t;
            // smallest k with k / n0 >= p, tolerant to rounding in 1 − t
            let k = (p * n0 - 1e-9).ceil().max(0.0) as usize;
            if k == 0 {
                return 1.0;
            }
            let c = y0[k.min(y0.len()) - 1];
            let below = y1.partition_point(|v| *v <= c) as f64;
            1.0 - below / n1
        })
        .collect();
    Ok(CurveEstimate::point(grid, values))
}

/// Empirical AUC (Mann–Whitney with ties counted one half).
pub fn empirical_auc(y_nondiseased: &[f64], y_diseased: &[f64]) -> Result<f64> {
    check_samples(y_nondiseased, y_diseased)?;
    let mut s = 0.0;
    for a in y_diseased {
        for b in y_nondiseased {
            s += if a > b {
                1.0
            } else if a == b {
                0.5
            } else {
                0.0
            };
        }
    }
    Ok(s / (y_nondiseased.len() * y_diseased.len()) as f64)
}
