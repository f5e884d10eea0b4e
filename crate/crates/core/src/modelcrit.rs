//! Predictive model-comparison criteria (CPO/LPML, WAIC) and posterior
//! predictive checks for the nondiseased-group model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::ddp::FitResult;
use crate::error::{ArocError, Result};
use crate::randkit::{log_sum_exp, RngStream};

/// Log densities `ln f(y_i | x_i, θ_s)`, one row per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLikMatrix {
    values: Vec<f64>,
    draws: usize,
    obs: usize,
}

impl LogLikMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let obs = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || obs == 0 {
            return Err(ArocError::EmptyInput("log-likelihood matrix".into()));
        }
        if rows.iter().any(|r| r.len() != obs) {
            return Err(ArocError::invalid("log-likelihood rows have unequal lengths"));
        }
        if let Some(v) = rows.iter().flatten().find(|v| v.is_nan() || **v == f64::INFINITY) {
            return Err(ArocError::NonFinite {
                what: "log-likelihood".into(),
                value: *v,
            });
        }
        Ok(Self {
            values: rows.concat(),
            draws: rows.len(),
            obs,
        })
    }

    /// Evaluates the mixture log density of every draw at every subject.
    pub fn from_fit(fit: &FitResult, sample: &Sample) -> Result<Self> {
        if fit.draws.is_empty() {
            return Err(ArocError::EmptyInput("posterior draws".into()));
        }
        if sample.is_empty() {
            return Err(ArocError::EmptyInput("sample".into()));
        }
        let (rows, _) = fit.design.rows(sample)?;
        let y = sample.y();
        let mut values = Vec::with_capacity(fit.draws.len() * y.len());
        for d in &fit.draws {
            for (z, &yi) in rows.iter().zip(y) {
                values.push(d.mixture_at(z).ln_pdf(yi));
            }
        }
        Ok(Self {
            values,
            draws: fit.draws.len(),
            obs: y.len(),
        })
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn obs(&self) -> usize {
        self.obs
    }

    pub fn get(&self, s: usize, i: usize) -> f64 {
        self.values[s * self.obs + i]
    }

    fn column(&self, i: usize) -> Vec<f64> {
        (0..self.draws).map(|s| self.get(s, i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpoReport {
    pub log_cpo: Vec<f64>,
    pub cpo: Vec<f64>,
    pub lpml: f64,
    /// Observations whose CPO is zero (log CPO = −∞).
    pub degenerate: Vec<usize>,
}

/// Harmonic-mean CPO, `CPO_i = (S⁻¹ Σ_s 1/f(y_i | θ_s))⁻¹`, computed in
/// log space; `LPML = Σ ln CPO_i`.
pub fn cpo_lpml(ll: &LogLikMatrix) -> CpoReport {
    let ln_s = (ll.draws() as f64).ln();
    let mut log_cpo = Vec::with_capacity(ll.obs());
    let mut degenerate = Vec::new();
    for i in 0..ll.obs() {
        let neg: Vec<f64> = ll.column(i).iter().map(|v| -v).collect();
        let v = -(log_sum_exp(&neg) - ln_s);
        if v == f64::NEG_INFINITY {
            degenerate.push(i);
        }
        log_cpo.push(v);
    }
    CpoReport {
        cpo: log_cpo.iter().map(|v| v.exp()).collect(),
        lpml: log_cpo.iter().sum(),
        log_cpo,
        degenerate,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub lpml: f64,
    pub waic: f64,
    pub lppd: f64,
    pub rho_waic: f64,
    pub cpo: Vec<f64>,
    pub degenerate: Vec<usize>,
}

/// WAIC `= −2(lppd − ρ)` with `lppd = Σ_i ln(S⁻¹ Σ_s f_si)` and
/// `ρ = Σ_i Var_s(ln f_si)` (divisor `S − 1`), plus CPO/LPML.
pub fn criteria(ll: &LogLikMatrix) -> Result<CriteriaReport> {
    let s = ll.draws();
    if s < 2 {
        return Err(ArocError::invalid("WAIC needs at least two posterior draws"));
    }
    let ln_s = (s as f64).ln();
    let mut lppd = 0.0;
    let mut rho = 0.0;
    for i in 0..ll.obs() {
        let col = ll.column(i);
        lppd += log_sum_exp(&col) - ln_s;
        let mean = col.iter().sum::<f64>() / s as f64;
        rho += col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s - 1) as f64;
    }
    let cpo = cpo_lpml(ll);
    Ok(CriteriaReport {
        lpml: cpo.lpml,
        waic: -2.0 * (lppd - rho),
        lppd,
        rho_waic: rho,
        cpo: cpo.cpo,
        degenerate: cpo.degenerate,
    })
}

/// Convenience wrapper: criteria of `fit` on `sample`.
pub fn waic(fit: &FitResult, sample: &Sample) -> Result<CriteriaReport> {
    criteria(&LogLikMatrix::from_fit(fit, sample)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    Sd,
    Skewness,
    /// Raw fourth standardized moment (3 for a normal law).
    Kurtosis,
}

impl Statistic {
    pub fn compute(self, y: &[f64]) -> f64 {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let moment = |k: i32| y.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
        match self {
            Statistic::Mean => mean,
            Statistic::Sd => moment(2).sqrt(),
            Statistic::Skewness => moment(3) / moment(2).powf(1.5),
            Statistic::Kurtosis => moment(4) / moment(2).powi(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveStats {
    pub statistics: Vec<Statistic>,
    /// One row per replicate dataset, one column per statistic.
    pub values: Vec<Vec<f64>>,
    /// The same statistics on the observed outcomes.
    pub observed: Vec<f64>,
    pub kurtosis_convention: String,
}

/// Replicate datasets from the posterior predictive at the observed design
/// rows and compute moment statistics on each. Draws are taken evenly
/// spaced through the stored chain.
pub fn posterior_predictive_stats(
    fit: &FitResult,
    sample: &Sample,
    n_replicates: usize,
    statistics: &[Statistic],
    rng: &mut RngStream,
) -> Result<PredictiveStats> {
    if fit.draws.is_empty() {
        return Err(ArocError::EmptyInput("posterior draws".into()));
    }
    if sample.is_empty() || n_replicates == 0 || statistics.is_empty() {
        return Err(ArocError::invalid("need observations, replicates and statistics"));
    }
    let (rows, _) = fit.design.rows(sample)?;
    let s = fit.draws.len();
    let mut values = Vec::with_capacity(n_replicates);
    let mut ystar = vec![0.0; rows.len()];
    for r in 0..n_replicates {
        let draw = &fit.draws[r * s / n_replicates];
        let sds: Vec<f64> = draw.sigma2.iter().map(|v| v.sqrt()).collect();
        for (yi, z) in ystar.iter_mut().zip(&rows) {
            let mut u = rng.random::<f64>();
            let mut l = draw.weights.len() - 1;
            for (k, w) in draw.weights.iter().enumerate() {
                if u < *w {
                    l = k;
                    break;
                }
                u -= w;
            }
            let mean: f64 = draw.betas[l].iter().zip(z).map(|(b, x)| b * x).sum();
            *yi = mean + sds[l] * crate::randkit::sample_std_normal(rng);
        }
        values.push(statistics.iter().map(|st| st.compute(&ystar)).collect());
    }
    Ok(PredictiveStats {
        statistics: statistics.to_vec(),
        values,
        observed: statistics.iter().map(|st| st.compute(sample.y())).collect(),
        kurtosis_convention: "raw fourth standardized moment (normal = 3)".into(),
    })
}

/// Mean and SD of a chain trace overall and in each half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub mean: f64,
    pub sd: f64,
    pub first_half_mean: f64,
    pub second_half_mean: f64,
    pub first_half_sd: f64,
    pub second_half_sd: f64,
}

pub fn chain_summary(trace: &[f64]) -> Result<ChainSummary> {
    if trace.len() < 4 {
        return Err(ArocError::invalid("chain summary needs at least four values"));
    }
    let ms = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
    };
    let half = trace.len() / 2;
    let (mean, sd) = ms(trace);
    let (m1, s1) = ms(&trace[..half]);
    let (m2, s2) = ms(&trace[half..]);
    Ok(ChainSummary {
        mean,
        sd,
        first_half_mean: m1,
        second_half_mean: m2,
        first_half_sd: s1,
        second_half_sd: s2,
    })
}
