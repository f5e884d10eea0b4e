//! Ground-truth AROC curves for the simulation scenarios.
//!
//! With `d(x) = μ_D(x) − μ_D̄(x)` the covariate-specific ROC is binormal, so
//! `AROC(t) = E_{X_D}[Φ((d(X) + σ_D̄ Φ⁻¹(t)) / σ_D)]` and
//! `AAUC = E_{X_D}[Φ(d(X) / √(σ_D̄² + σ_D²))]`. The outer expectation is a
//! Monte Carlo average over a fixed set of diseased covariate draws.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aroc::CurveEstimate;
use crate::error::{ArocError, Result};
use crate::randkit::{std_normal_cdf, std_normal_quantile, RngStream};

use super::scenario::{Scenario, DISEASED_SD, NONDISEASED_SD};

pub const ORACLE_SEED: u64 = 0x5EED_A20C;
pub const ORACLE_DRAWS: usize = 1_000_000;

const CHUNK: usize = 1 << 14;

/// A true curve on an FPF grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueCurve {
    pub scenario: Scenario,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub aauc: f64,
}

impl TrueCurve {
    pub fn check_grid(&self, grid: &[f64]) -> Result<()> {
        if self.grid.len() != grid.len() {
            return Err(ArocError::GridMismatch(format!(
                "{} truth points vs {} estimate points",
                self.grid.len(),
                grid.len()
            )));
        }
        if let Some(k) = self.grid.iter().zip(grid).position(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(ArocError::GridMismatch(format!(
                "grid point {k}: truth {} vs estimate {}",
                self.grid[k], grid[k]
            )));
        }
        Ok(())
    }

    pub fn check_estimate(&self, est: &CurveEstimate) -> Result<()> {
        self.check_grid(&est.grid)
    }
}

/// `d(X)` at the oracle's diseased covariate draws.
fn separations(scenario: Scenario) -> &'static [f64] {
    static CACHE: [OnceLock<Vec<f64>>; 6] = [const { OnceLock::new() }; 6];
    CACHE[scenario.index()].get_or_init(|| {
        let mut rng = RngStream::new(ORACLE_SEED, scenario.index() as u64);
        (0..ORACLE_DRAWS)
            .map(|_| {
                let x = scenario.sample_covariates(true, &mut rng);
                scenario.diseased_mean(&x) - scenario.nondiseased_mean(&x)
            })
            .collect()
    })
}

/// Chunked mean with a fixed summation order (independent of thread count).
fn mc_mean(d: &[f64], f: impl Fn(f64) -> f64 + Sync) -> f64 {
    let partial: Vec<f64> = d
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(|&v| f(v)).sum::<f64>())
        .collect();
    partial.iter().sum::<f64>() / d.len() as f64
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(ArocError::invalid(format!("FPF must lie in [0, 1], got {t}")));
    }
    Ok(())
}

/// `Φ(0.5 + 0.5 Φ⁻¹(t))`, the Scenario I curve.
pub fn binormal_scenario_one(t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(binormal(0.5, t))
}

fn binormal(d: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let z = std_normal_quantile(t).expect("t in (0, 1)");
        std_normal_cdf((d + NONDISEASED_SD * z) / DISEASED_SD)
    }
}

/// True AROC at one FPF. Scenario I is exact; the rest use the Monte Carlo
/// oracle.
pub fn true_aroc(scenario: Scenario, t: f64) -> Result<f64> {
    check_t(t)?;
    if scenario == Scenario::I {
        return Ok(binormal(0.5, t));
    }
    if t <= 0.0 || t >= 1.0 {
        return Ok(t);
    }
    Ok(true_aroc_mc(scenario, t))
}

/// Monte Carlo evaluation for any scenario, including Scenario I.
pub fn true_aroc_mc(scenario: Scenario, t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return t.clamp(0.0, 1.0);
    }
    let z = std_normal_quantile(t).expect("t in (0, 1)");
    mc_mean(separations(scenario), |d| {
        std_normal_cdf((d + NONDISEASED_SD * z) / DISEASED_SD)
    })
}

pub fn true_aauc(scenario: Scenario) -> f64 {
    let s = (NONDISEASED_SD * NONDISEASED_SD + DISEASED_SD * DISEASED_SD).sqrt();
    if scenario == Scenario::I {
        return std_normal_cdf(0.5 / s);
    }
    true_aauc_mc(scenario)
}

pub fn true_aauc_mc(scenario: Scenario) -> f64 {
    let s = (NONDISEASED_SD * NONDISEASED_SD + DISEASED_SD * DISEASED_SD).sqrt();
    mc_mean(separations(scenario), |d| std_normal_cdf(d / s))
}

type CurveMemo = Mutex<HashMap<(Scenario, Vec<u64>), TrueCurve>>;

fn grid_key(scenario: Scenario, grid: &[f64]) -> (Scenario, Vec<u64>) {
    (scenario, grid.iter().map(|t| t.to_bits()).collect())
}

/// True curve on `grid`, memoized per process.
pub fn true_aroc_curve(scenario: Scenario, grid: &[f64]) -> Result<TrueCurve> {
    static MEMO: OnceLock<CurveMemo> = OnceLock::new();
    for &t in grid {
        check_t(t)?;
    }
    let memo = MEMO.get_or_init(Default::default);
    let key = grid_key(scenario, grid);
    if let Some(c) = memo.lock().expect("truth cache poisoned").get(&key) {
        return Ok(c.clone());
    }
    let values = grid
        .iter()
        .map(|&t| true_aroc(scenario, t))
        .collect::<Result<Vec<_>>>()?;
    let curve = TrueCurve {
        scenario,
        grid: grid.to_vec(),
        values,
        aauc: true_aauc(scenario),
    };
    memo.lock().expect("truth cache poisoned").insert(key, curve.clone());
    Ok(curve)
}

/// Bumped whenever the generating laws change, so stale caches are not reused.
pub const ORACLE_VERSION: u32 = 2;

fn cache_path(dir: &Path, scenario: Scenario, grid: &[f64]) -> PathBuf {
    dir.join(format!("aroc_truth_v{ORACLE_VERSION}_{}_{}.json", scenario.label(), grid.len()))
}

/// Like [`true_aroc_curve`], but also persisted as JSON under `dir`. A
/// cached file is reused only if its grid matches exactly.
pub fn true_aroc_curve_cached(scenario: Scenario, grid: &[f64], dir: &Path) -> Result<TrueCurve> {
    let path = cache_path(dir, scenario, grid);
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(c) = serde_json::from_str::<TrueCurve>(&text) {
            if c.scenario == scenario && c.grid == grid {
                return Ok(c);
            }
        }
    }
    let curve = true_aroc_curve(scenario, grid)?;
    let io = |e: std::io::Error| ArocError::invalid(format!("truth cache {}: {e}", path.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let text = serde_json::to_string(&curve).map_err(|e| ArocError::invalid(e.to_string()))?;
    fs::write(&path, text).map_err(io)?;
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aroc::fpf_grid;

    #[test]
    fn scenario_one_closed_form() {
        let auc = true_aauc(Scenario::I);
        assert!((auc - 0.6726).abs() < 1e-4, "{auc}");
        // numeric integration oracle for the area: midpoint rule on the curve
        let n = 200_000;
        let area: f64 = (0..n)
            .map(|i| binormal_scenario_one((i as f64 + 0.5) / n as f64).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((area - auc).abs() < 1e-5, "{area} vs {auc}");
    }

    #[test]
    fn endpoints_are_exact() {
        for sc in Scenario::ALL {
            assert_eq!(true_aroc(sc, 0.0).unwrap(), 0.0);
            assert_eq!(true_aroc(sc, 1.0).unwrap(), 1.0);
        }
        assert!(true_aroc(Scenario::II, 1.5).is_err());
    }

    #[test]
    fn scenario_two_matches_scenario_one() {
        for t in [0.01, 0.1, 0.3, 0.5, 0.8, 0.99] {
            let mc = true_aroc(Scenario::II, t).unwrap();
            assert!((mc - binormal_scenario_one(t).unwrap()).abs() < 2e-3, "t = {t}");
        }
        // and the oracle reproduces Scenario I itself
        let mc = true_aroc_mc(Scenario::I, 0.2);
        assert!((mc - binormal_scenario_one(0.2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn area_matches_trapezoid_of_curve() {
        let n = 10_000;
        for sc in [Scenario::III, Scenario::VI] {
            let grid: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
            let d = separations(sc);
            // a 2% subsample keeps the 10⁴-point curve cheap; the area
            // identity holds for any fixed set of draws
            let sub: Vec<f64> = d.iter().step_by(50).copied().collect();
            let curve: Vec<f64> = grid
                .iter()
                .map(|&t| {
                    if t <= 0.0 || t >= 1.0 {
                        t
                    } else {
                        let z = std_normal_quantile(t).unwrap();
                        sub.iter().map(|&v| std_normal_cdf(v + 0.5 * z)).sum::<f64>() / sub.len() as f64
                    }
                })
                .collect();
            let trap: f64 = curve.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>() / n as f64;
            let exact = sub.iter().map(|&v| std_normal_cdf(v / 1.25f64.sqrt())).sum::<f64>() / sub.len() as f64;
            assert!((trap - exact).abs() < 1e-4, "{sc}: {trap} vs {exact}");
        }
    }

    #[test]
    fn curve_is_monotone_and_cached() {
        let grid = fpf_grid(101);
        let c = true_aroc_curve(Scenario::V, &grid).unwrap();
        assert!(c.values.windows(2).all(|w| w[1] >= w[0]));
        let again = true_aroc_curve(Scenario::V, &grid).unwrap();
        assert_eq!(c, again);
        assert!(c.check_grid(&grid[..100]).is_err());
    }

    #[test]
    fn disk_cache_roundtrip() {
        let dir = std::env::temp_dir().join(format!("aroc_truth_test_{}", std::process::id()));
        let grid = fpf_grid(11);
        let a = true_aroc_curve_cached(Scenario::III, &grid, &dir).unwrap();
        let b = true_aroc_curve_cached(Scenario::III, &grid, &dir).unwrap();
        assert_eq!(a, b);
        assert!(cache_path(&dir, Scenario::III, &grid).exists());
        let _ = fs::remove_dir_all(&dir);
    }
}
