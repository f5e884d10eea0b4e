use serde::{Deserialize, Serialize};

use crate::error::{ArocError, Result};
use crate::randkit::{sample_flat_dirichlet, RngStream};

use super::placement::PlacementMatrix;
use super::summary::{check_grid, check_level, CurveEstimate, ScalarEstimate};

/// `AAUC = 1 − Σ q_j U_j`, the exact area under the weighted step curve.
pub fn aauc(q: &[f64], u: &[f64]) -> f64 {
    paauc_unchecked(1.0, q, u)
}

/// `pAAUC(t0) = t0 − Σ q_j min(t0, U_j)`, the area under the step curve on
/// `[0, t0]`.
pub fn paauc(t0: f64, q: &[f64], u: &[f64]) -> Result<f64> {
    if !(t0 > 0.0 && t0 <= 1.0) {
        return Err(ArocError::invalid(format!("pAAUC bound must lie in (0, 1], got {t0}")));
    }
    Ok(paauc_unchecked(t0, q, u))
}

fn paauc_unchecked(t0: f64, q: &[f64], u: &[f64]) -> f64 {
    let s: f64 = q.iter().zip(u).map(|(w, v)| w * v.min(t0)).sum();
    t0 - s
}

/// Weighted step curve `t ↦ Σ q_j 1(U_j ≤ t)` on a sorted grid.
pub fn weighted_step_curve(q: &[f64], u: &[f64], grid: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut k = 0;
    for &t in grid {
        while k < order.len() && u[order[k]] <= t {
            acc += q[order[k]];
            k += 1;
        }
        // once every placement is counted the height is exactly 1
        out.push(if k == order.len() { 1.0 } else { acc.min(1.0) });
    }
    out
}

/// Output of the Bayesian-bootstrap AROC step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArocEstimate {
    pub curve: CurveEstimate,
    pub aauc: ScalarEstimate,
    /// One entry per requested bound, in request order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub paauc: Vec<PartialArea>,
    /// Per-draw curves, kept only on request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialArea {
    pub t0: f64,
    pub estimate: ScalarEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub level: f64,
    /// Upper FPF limits for partial areas.
    pub t0: Vec<f64>,
    pub keep_ensemble: bool,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            level: 0.95,
            t0: Vec::new(),
            keep_ensemble: false,
        }
    }
}

/// One flat-Dirichlet weight vector per draw; each draw's curve, AAUC and
/// pAAUC share that weight vector.
pub fn bb_aroc(
    u: &PlacementMatrix,
    grid: &[f64],
    options: &BootstrapOptions,
    rng: &mut RngStream,
) -> Result<ArocEstimate> {
    check_grid(grid)?;
    check_level(options.level)?;
    for &t0 in &options.t0 {
        paauc(t0, &[], &[])?;
    }
    let mut curves = Vec::with_capacity(u.draws());
    let mut areas = Vec::with_capacity(u.draws());
    let mut partial: Vec<Vec<f64>> = vec![Vec::with_capacity(u.draws()); options.t0.len()];
    for s in 0..u.draws() {
        let row = u.row(s);
        let q = sample_flat_dirichlet(rng, row.len());
        curves.push(weighted_step_curve(&q, row, grid));
        areas.push(aauc(&q, row));
        for (p, &t0) in partial.iter_mut().zip(&options.t0) {
            p.push(paauc_unchecked(t0, &q, row));
        }
    }
    let curve = CurveEstimate::from_ensemble(grid, &curves, options.level)?;
    let aauc = ScalarEstimate::from_ensemble(&areas, options.level)?;
    let paauc = options
        .t0
        .iter()
        .zip(&partial)
        .map(|(&t0, values)| {
            Ok(PartialArea {
                t0,
                estimate: ScalarEstimate::from_ensemble(values, options.level)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ArocEstimate {
        curve,
        aauc,
        paauc,
        ensemble: options.keep_ensemble.then_some(curves),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aroc::fpf_grid;
    use proptest::prelude::*;
    use rand::Rng;

    /// Exact integral of `t ↦ Σ q_j 1(U_j ≤ t)` over `[0, t0]`, summing the
    /// curve height over the pieces between sorted breakpoints.
    fn step_integral(q: &[f64], u: &[f64], t0: f64) -> f64 {
        let mut pts: Vec<(f64, f64)> = u.iter().zip(q).map(|(a, b)| (*a, *b)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut area = 0.0;
        let mut height = 0.0;
        let mut prev = 0.0;
        for (uj, qj) in pts {
            let x = uj.min(t0);
            area += height * (x - prev);
            prev = x;
            height += qj;
        }
        area + height * (t0 - prev)
    }

    #[test]
    fn hand_examples() {
        assert_eq!(aauc(&[0.5, 0.5], &[0.0, 0.0]), 1.0);
        assert!((aauc(&[0.5, 0.5], &[0.2, 0.4]) - 0.7).abs() < 1e-15);
        assert!((paauc(0.3, &[0.5, 0.5], &[0.2, 0.4]).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(paauc(0.1, &[0.5, 0.5], &[0.2, 0.4]).unwrap(), 0.0);
        assert!(paauc(0.0, &[1.0], &[0.5]).is_err());
        assert!(paauc(1.1, &[1.0], &[0.5]).is_err());
    }

    proptest! {
        #[test]
        fn closed_forms_match_step_integral(
            raw in prop::collection::vec((0.001f64..1.0, 0.0f64..=1.0), 1..60),
            t0 in 0.01f64..=1.0,
        ) {
            let total: f64 = raw.iter().map(|r| r.0).sum();
            let q: Vec<f64> = raw.iter().map(|r| r.0 / total).collect();
            let u: Vec<f64> = raw.iter().map(|r| r.1).collect();
            prop_assert!((aauc(&q, &u) - step_integral(&q, &u, 1.0)).abs() < 1e-12);
            prop_assert!((paauc(t0, &q, &u).unwrap() - step_integral(&q, &u, t0)).abs() < 1e-12);
            prop_assert_eq!(paauc(1.0, &q, &u).unwrap().to_bits(), aauc(&q, &u).to_bits());
            let p = paauc(t0, &q, &u).unwrap();
            prop_assert!(p >= -1e-15 && p <= t0 + 1e-15);
        }
    }

    #[test]
    fn step_curve_shape() {
        let grid = fpf_grid(11);
        let c = weighted_step_curve(&[0.25, 0.25, 0.5], &[0.3, 0.0, 0.3], &grid);
        assert_eq!(c[0], 0.25);
        assert_eq!(c[2], 0.25);
        assert_eq!(c[3], 1.0);
        assert!(c.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn all_zero_placements_give_unit_curve() {
        let u = PlacementMatrix::new(vec![0.0; 20], 4, 5).unwrap();
        let est = bb_aroc(
            &u,
            &fpf_grid(11),
            &BootstrapOptions::default(),
            &mut RngStream::new(1, 0),
        )
        .unwrap();
        assert!(est.curve.mean.iter().all(|v| *v == 1.0));
        assert_eq!(est.aauc.mean, 1.0);
    }

    #[test]
    fn uniform_placements_give_diagonal() {
        let mut rng = RngStream::new(2, 0);
        let (s, n) = (500, 200);
        let vals: Vec<f64> = (0..s * n).map(|_| rng.random::<f64>()).collect();
        let u = PlacementMatrix::new(vals, s, n).unwrap();
        let opts = BootstrapOptions {
            t0: vec![0.2, 1.0],
            keep_ensemble: true,
            ..Default::default()
        };
        let grid = fpf_grid(101);
        let est = bb_aroc(&u, &grid, &opts, &mut rng).unwrap();
        let sup = est
            .curve
            .mean
            .iter()
            .zip(&grid)
            .map(|(a, t)| (a - t).abs())
            .fold(0.0, f64::max);
        assert!(sup < 0.03, "sup-norm {sup}");
        for c in est.ensemble.as_ref().unwrap() {
            assert!(c.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(*c.last().unwrap(), 1.0);
        }
        assert!((est.aauc.mean - 0.5).abs() < 0.03);
        let p = est.paauc[0];
        assert!((p.estimate.mean - 0.02).abs() < 0.01);
        // pAAUC(1) shares the draw weights with the AAUC
        assert_eq!(est.paauc[1].estimate, est.aauc);
        for k in 0..grid.len() {
            assert!(est.curve.lower[k] <= est.curve.mean[k] && est.curve.mean[k] <= est.curve.upper[k]);
        }
    }

    #[test]
    fn rejects_empty_grid() {
        let u = PlacementMatrix::new(vec![0.5], 1, 1).unwrap();
        assert!(bb_aroc(&u, &[], &BootstrapOptions::default(), &mut RngStream::new(1, 0)).is_err());
    }
}
