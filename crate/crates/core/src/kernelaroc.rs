//! Kernel location-scale AROC estimator with a residual/case bootstrap.
//!
//! The nondiseased outcome is modelled as `Y = μ(X) + σ(X) ε`, with `μ`
//! and `σ²` estimated by Nadaraya–Watson smoothing (Gaussian kernel) and
//! `ε` by the empirical law of the standardized residuals. Only a single
//! continuous covariate is supported.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aroc::{weighted_step_curve, CurveEstimate, ScalarEstimate};
use crate::data::Dataset;
use crate::error::{ArocError, Result};
use crate::randkit::RngStream;
use crate::splines::quantile_sorted;

/// Nadaraya–Watson estimate at each point of `x_eval`. Points where every
/// kernel weight underflows take the value of the nearest training point;
/// their indices are returned alongside.
pub fn nw_regress(x: &[f64], y: &[f64], h: f64, x_eval: &[f64]) -> Result<(Vec<f64>, Vec<usize>)> {
    check_xy(x, y, 2)?;
    let s = Smoother::new(x, x_eval, h, false)?;
    Ok((s.apply(y), s.fallback.clone()))
}

fn check_xy(x: &[f64], y: &[f64], min_n: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(ArocError::DimensionMismatch {
            context: "kernel regression x vs y".into(),
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < min_n {
        return Err(ArocError::invalid(format!(
            "kernel regression needs at least {min_n} points"
        )));
    }
    if let Some(v) = x.iter().chain(y).find(|v| !v.is_finite()) {
        return Err(ArocError::NonFinite {
            what: "kernel regression data".into(),
            value: *v,
        });
    }
    Ok(())
}

/// Row-normalized kernel weights from training points to evaluation points.
#[derive(Debug, Clone)]
struct Smoother {
    weights: Vec<f64>,
    n_train: usize,
    fallback: Vec<usize>,
}

impl Smoother {
    /// `leave_one_out` drops training point `k` from evaluation row `k`.
    fn new(x: &[f64], x_eval: &[f64], h: f64, leave_one_out: bool) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(ArocError::invalid(format!("bandwidth must be positive, got {h}")));
        }
        let n = x.len();
        let mut weights = vec![0.0; x_eval.len() * n];
        let mut fallback = Vec::new();
        for (k, &x0) in x_eval.iter().enumerate() {
            let row = &mut weights[k * n..(k + 1) * n];
            let mut total = 0.0;
            for (i, (w, &xi)) in row.iter_mut().zip(x).enumerate() {
                if leave_one_out && i == k {
                    continue;
                }
                let u = (xi - x0) / h;
                *w = (-0.5 * u * u).exp();
                total += *w;
            }
            if total > 0.0 {
                row.iter_mut().for_each(|w| *w /= total);
            } else {
                fallback.push(k);
                let mut best = f64::INFINITY;
                for (i, &xi) in x.iter().enumerate() {
                    if leave_one_out && i == k {
                        continue;
                    }
                    best = best.min((xi - x0).abs());
                }
                let ties: Vec<usize> = (0..n)
                    .filter(|&i| !(leave_one_out && i == k) && (x[i] - x0).abs() == best)
                    .collect();
                for &i in &ties {
                    row[i] = 1.0 / ties.len() as f64;
                }
            }
        }
        Ok(Self {
            weights,
            n_train: n,
            fallback,
        })
    }

    fn apply(&self, y: &[f64]) -> Vec<f64> {
        self.weights
            .chunks(self.n_train)
            .map(|row| row.iter().zip(y).map(|(w, v)| w * v).sum())
            .collect()
    }

    /// Applies the smoother to rows selected by index.
    fn apply_rows(&self, rows: &[usize], y: &[f64]) -> Vec<f64> {
        rows.iter()
            .map(|&k| {
                self.weights[k * self.n_train..(k + 1) * self.n_train]
                    .iter()
                    .zip(y)
                    .map(|(w, v)| w * v)
                    .sum()
            })
            .collect()
    }
}

/// Leave-one-out squared prediction error of the NW smoother at bandwidth `h`.
pub fn loo_error(x: &[f64], y: &[f64], h: f64) -> Result<f64> {
    check_xy(x, y, 3)?;
    let s = Smoother::new(x, x, h, true)?;
    let fitted = s.apply(y);
    Ok(fitted.iter().zip(y).map(|(f, v)| (v - f).powi(2)).sum::<f64>() / y.len() as f64)
}

fn sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Search interval `[h0 / 50, 50 h0]` around a normal-reference bandwidth.
pub fn bandwidth_search_range(x: &[f64]) -> Result<(f64, f64)> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let spread = sd(x);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let mut scale = if iqr > 0.0 { spread.min(iqr / 1.34) } else { spread };
    if !(scale > 0.0) {
        return Err(ArocError::invalid(
            "kernel bandwidth selection needs a non-constant covariate",
        ));
    }
    if !scale.is_finite() {
        scale = sorted[sorted.len() - 1] - sorted[0];
    }
    let h0 = 1.06 * scale * (x.len() as f64).powf(-0.2);
    Ok((h0 / 50.0, h0 * 50.0))
}

const LSCV_GRID: usize = 41;

/// Least-squares cross-validated bandwidth: the minimizer of the
/// leave-one-out error over a log-spaced grid, refined by golden-section
/// search between the grid neighbours of the best point. When the error is
/// flat (for example constant `y`) the grid minimum is returned.
pub fn lscv_bandwidth(x: &[f64], y: &[f64]) -> Result<f64> {
    check_xy(x, y, 3)?;
    let (lo, hi) = bandwidth_search_range(x)?;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..LSCV_GRID)
        .map(|k| (llo + (lhi - llo) * k as f64 / (LSCV_GRID - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[LSCV_GRID - 1] = hi;
    if y.iter().all(|v| *v == y[0]) {
        return Ok(lo);
    }
    let errs: Vec<f64> = grid.iter().map(|&h| loo_error(x, y, h)).collect::<Result<_>>()?;
    let mut best = 0;
    for (k, e) in errs.iter().enumerate() {
        if *e < errs[best] {
            best = k;
        }
    }
    let spread = errs.iter().copied().fold(f64::NEG_INFINITY, f64::max) - errs[best];
    let top = errs.iter().copied().fold(0.0, f64::max);
    if !(spread > 1e-12 * top) {
        return Ok(grid[0]);
    }
    let mut a = grid[best.saturating_sub(1)].ln();
    let mut b = grid[(best + 1).min(LSCV_GRID - 1)].ln();
    let f = |lh: f64| loo_error(x, y, lh.exp()).unwrap_or(f64::INFINITY);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let refined = 0.5 * (a + b);
    let h = if f(refined) <= errs[best] {
        refined.exp()
    } else {
        grid[best]
    };
    Ok(h.clamp(lo, hi))
}

/// Fitted location-scale model of the nondiseased outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationScaleFit {
    pub bandwidth_mean: f64,
    pub bandwidth_var: f64,
    /// Standardized residuals at the training points.
    pub residuals: Vec<f64>,
    pub var_floor: f64,
    /// Evaluation points where the variance estimate was floored.
    pub floored: usize,
    /// Evaluation points where kernel weights underflowed.
    pub fallbacks: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    sq_resid: Vec<f64>,
}

impl LocationScaleFit {
    /// Fits mean and variance functions; bandwidths are selected by LSCV
    /// unless given.
    pub fn fit(x: &[f64], y: &[f64], bandwidths: Option<(f64, f64)>) -> Result<Self> {
        check_xy(x, y, 3)?;
        let h_mean = match bandwidths {
            Some((h, _)) => h,
            None => lscv_bandwidth(x, y)?,
        };
        let sm = Smoother::new(x, x, h_mean, false)?;
        let mean = sm.apply(y);
        let sq: Vec<f64> = y.iter().zip(&mean).map(|(v, m)| (v - m).powi(2)).collect();
        let h_var = match bandwidths {
            Some((_, h)) => h,
            None => lscv_bandwidth(x, &sq)?,
        };
        let sv = Smoother::new(x, x, h_var, false)?;
        let var_y = sd(y).powi(2);
        let var_floor = 1e-10 * if var_y > 0.0 { var_y } else { 1.0 };
        let mut floored = 0;
        let var: Vec<f64> = sv
            .apply(&sq)
            .into_iter()
            .map(|v| {
                if v > var_floor {
                    v
                } else {
                    floored += 1;
                    var_floor
                }
            })
            .collect();
        let residuals = y
            .iter()
            .zip(&mean)
            .zip(&var)
            .map(|((v, m), s2)| (v - m) / s2.sqrt())
            .collect();
        Ok(Self {
            bandwidth_mean: h_mean,
            bandwidth_var: h_var,
            residuals,
            var_floor,
            floored,
            fallbacks: sm.fallback.len() + sv.fallback.len(),
            x: x.to_vec(),
            y: y.to_vec(),
            sq_resid: sq,
        })
    }

    /// Mean and variance functions at new covariate values.
    pub fn predict(&self, x_eval: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = Smoother::new(&self.x, x_eval, self.bandwidth_mean, false)?.apply(&self.y);
        let v = Smoother::new(&self.x, x_eval, self.bandwidth_var, false)?
            .apply(&self.sq_resid)
            .into_iter()
            .map(|v| v.max(self.var_floor))
            .collect();
        Ok((m, v))
    }

    /// `1 − F̂_ε((y − μ̂(x)) / σ̂(x))` for each diseased pair.
    pub fn placement_values(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let (m, v) = self.predict(x)?;
        let mut sorted = self.residuals.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(y.iter()
            .zip(m.iter().zip(&v))
            .map(|(yj, (mj, vj))| survival(&sorted, (yj - mj) / vj.sqrt()))
            .collect())
    }
}

/// `1 − #{e_i ≤ e} / n` for sorted residuals.
fn survival(sorted: &[f64], e: f64) -> f64 {
    1.0 - sorted.partition_point(|r| *r <= e) as f64 / sorted.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    /// Number of bootstrap resamples (0 for the point estimate only).
    pub resamples: usize,
    pub level: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            resamples: 500,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelArocEstimate {
    /// `mean` holds the point estimate; the band is the bootstrap
    /// percentile interval.
    pub curve: CurveEstimate,
    pub aauc: ScalarEstimate,
    pub bandwidth_mean: f64,
    pub bandwidth_var: f64,
    pub floored_variance: usize,
    pub kernel_fallbacks: usize,
}

/// Kernel AROC estimate with bootstrap percentile bands. The bootstrap
/// resamples standardized residuals in the nondiseased group (refitting
/// both functions with the original bandwidths) and resamples cases in the
/// diseased group. Resample `b` draws from stream `b` of a key taken from `rng`.
pub fn kernel_aroc(
    data: &Dataset,
    grid: &[f64],
    options: &KernelOptions,
    rng: &mut RngStream,
) -> Result<KernelArocEstimate> {
    if data.schema().len() != 1 {
        return Err(ArocError::invalid(format!(
            "kernel estimator supports exactly one continuous covariate, got {}",
            data.schema().len()
        )));
    }
    if grid.is_empty() {
        return Err(ArocError::EmptyInput("FPF grid".into()));
    }
    let (x0, y0) = (data.nondiseased().column(0), data.nondiseased().y());
    let (x1, y1) = (data.diseased().column(0), data.diseased().y());
    if x1.is_empty() {
        return Err(ArocError::EmptyInput("diseased sample".into()));
    }
    let fit = LocationScaleFit::fit(x0, y0, None)?;
    let n1 = y1.len();
    let uniform = vec![1.0 / n1 as f64; n1];
    let u = fit.placement_values(x1, y1)?;
    let point = weighted_step_curve(&uniform, &u, grid);
    let point_area = 1.0 - u.iter().sum::<f64>() / n1 as f64;

    // Smoothers for the bootstrap: training x never changes and diseased
    // covariates are resampled from the original ones.
    let sm_mean = Smoother::new(x0, x0, fit.bandwidth_mean, false)?;
    let sm_var = Smoother::new(x0, x0, fit.bandwidth_var, false)?;
    let ev_mean = Smoother::new(x0, x1, fit.bandwidth_mean, false)?;
    let ev_var = Smoother::new(x0, x1, fit.bandwidth_var, false)?;
    let mean0 = sm_mean.apply(y0);
    let sd0: Vec<f64> = sm_var
        .apply(&fit.sq_resid)
        .into_iter()
        .map(|v| v.max(fit.var_floor).sqrt())
        .collect();
    let n0 = y0.len();
    let base_seed = rng.next_u64();
    let resamples: Vec<(Vec<f64>, f64)> = (0..options.resamples)
        .into_par_iter()
        .map(|b| {
            let mut r = RngStream::new(base_seed, b as u64);
            let ystar: Vec<f64> = (0..n0)
                .map(|i| mean0[i] + sd0[i] * fit.residuals[r.random_range(0..n0)])
                .collect();
            let m_b = sm_mean.apply(&ystar);
            let sq_b: Vec<f64> = ystar.iter().zip(&m_b).map(|(v, m)| (v - m).powi(2)).collect();
            let s_b: Vec<f64> = sm_var
                .apply(&sq_b)
                .into_iter()
                .map(|v| v.max(fit.var_floor).sqrt())
                .collect();
            let mut eps: Vec<f64> = (0..n0).map(|i| (ystar[i] - m_b[i]) / s_b[i]).collect();
            eps.sort_by(f64::total_cmp);
            let rows: Vec<usize> = (0..n1).map(|_| r.random_range(0..n1)).collect();
            let me = ev_mean.apply_rows(&rows, &ystar);
            let ve = ev_var.apply_rows(&rows, &sq_b);
            let ub: Vec<f64> = rows
                .iter()
                .enumerate()
                .map(|(k, &j)| survival(&eps, (y1[j] - me[k]) / ve[k].max(fit.var_floor).sqrt()))
                .collect();
            let area = 1.0 - ub.iter().sum::<f64>() / n1 as f64;
            (weighted_step_curve(&uniform, &ub, grid), area)
        })
        .collect();

    let (curve, aauc) = if resamples.is_empty() {
        (
            CurveEstimate::point(grid, point),
            ScalarEstimate {
                mean: point_area,
                lower: point_area,
                upper: point_area,
            },
        )
    } else {
        let curves: Vec<Vec<f64>> = resamples.iter().map(|r| r.0.clone()).collect();
        let areas: Vec<f64> = resamples.iter().map(|r| r.1).collect();
        let mut band = CurveEstimate::from_ensemble(grid, &curves, options.level)?;
        band.mean = point;
        let mut a = ScalarEstimate::from_ensemble(&areas, options.level)?;
        a.mean = point_area;
        (band, a)
    };
    Ok(KernelArocEstimate {
        curve,
        aauc,
        bandwidth_mean: fit.bandwidth_mean,
        bandwidth_var: fit.bandwidth_var,
        floored_variance: fit.floored,
        kernel_fallbacks: fit.fallbacks + ev_mean.fallback.len() + ev_var.fallback.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randkit::{sample_normal, std_normal_pdf};

    #[test]
    fn three_point_hand_weights() {
        let x = [0.0, 1.0, 3.0];
        let y = [1.0, 2.0, 4.0];
        let h = 1.5;
        let (m, fb) = nw_regress(&x, &y, h, &[0.5]).unwrap();
        let w: Vec<f64> = x.iter().map(|xi| std_normal_pdf((xi - 0.5) / h)).collect();
        let expect = w.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>();
        assert!((m[0] - expect).abs() < 1e-12);
        assert!(fb.is_empty());
    }

    #[test]
    fn flat_and_constant_limits() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let (m, _) = nw_regress(&x, &y, 1e6 * 2.9, &[0.0, 1.5, 2.9]).unwrap();
        assert!(m.iter().all(|v| (v - mean).abs() < 1e-9));
        let (c, _) = nw_regress(&x, &[2.5; 30], 0.05, &[0.3, 2.2]).unwrap();
        assert!(c.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn underflow_falls_back_to_nearest_neighbour() {
        let (m, fb) = nw_regress(&[0.0, 10.0], &[1.0, 7.0], 1e-3, &[9.0]).unwrap();
        assert_eq!(m, vec![7.0]);
        assert_eq!(fb, vec![0]);
    }

    #[test]
    fn lscv_properties() {
        let mut rng = RngStream::new(1, 0);
        let x: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..6.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| v.sin() + 0.3 * sample_normal(&mut rng, 0.0, 1.0).unwrap())
            .collect();
        let h = lscv_bandwidth(&x, &y).unwrap();
        let (lo, hi) = bandwidth_search_range(&x).unwrap();
        assert!(h >= lo && h <= hi);
        let e = loo_error(&x, &y, h).unwrap();
        assert!(e <= loo_error(&x, &y, h / 4.0).unwrap());
        assert!(e <= loo_error(&x, &y, 4.0 * h).unwrap());
        let hc = lscv_bandwidth(&x, &vec![1.0; 200]).unwrap();
        assert_eq!(hc, lo);
        assert!(lscv_bandwidth(&[1.0; 10], &y[..10]).is_err());
    }

    #[test]
    fn standardized_residuals_are_standardized() {
        let mut rng = RngStream::new(2, 0);
        let x: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| 2.0 * v + (0.2 + 0.3 * v) * sample_normal(&mut rng, 0.0, 1.0).unwrap())
            .collect();
        let fit = LocationScaleFit::fit(&x, &y, None).unwrap();
        let n = fit.residuals.len() as f64;
        let m = fit.residuals.iter().sum::<f64>() / n;
        let v = fit.residuals.iter().map(|r| (r - m).powi(2)).sum::<f64>() / n;
        assert!(m.abs() < 0.1, "mean {m}");
        assert!((v - 1.0).abs() < 0.1, "var {v}");
        let mut sorted = fit.residuals.clone();
        sorted.sort_by(f64::total_cmp);
        for e in [-1.0, 0.0, 0.7] {
            let s = survival(&sorted, e) * n;
            assert!((s - s.round()).abs() < 1e-9);
        }
    }
}
