//! Replicated simulation studies scoring an estimator against the truth.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aroc::{
    bb_aroc, fpf_grid, placement_values, pooled_roc_bb, BootstrapOptions, CurveEstimate, ScalarEstimate,
};
use crate::data::Dataset;
use crate::ddp::{gibbs_fit, GibbsConfig, PriorSpec};
use crate::error::{ArocError, Result};
use crate::kernelaroc::{kernel_aroc, KernelOptions};
use crate::modelcrit::waic;
use crate::randkit::RngStream;
use crate::splines::{Design, ModelSpec};

use super::metrics::{band_coverage, coverage_fraction, ermse, mean_sd};
use super::scenario::{generate_scenario, SampleSizes, Scenario};
use super::truth::{true_aroc_curve, TrueCurve};

pub const DESK_REPLICATES: usize = 50;
pub const DESK_NSIM: usize = 3_000;
pub const DESK_NBURN: usize = 500;
pub const PAPER_REPLICATES: usize = 100;
pub const PAPER_NSIM: usize = 10_000;
pub const PAPER_NBURN: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EstimatorConfig {
    /// B-spline DDP mixture for the nondiseased group.
    Bnp {
        knots: usize,
        components: usize,
        nsim: usize,
        nburn: usize,
    },
    /// Normal linear regression for the nondiseased group (one component).
    Bsp {
        nsim: usize,
        nburn: usize,
    },
    Kernel {
        resamples: usize,
    },
    /// Bayesian-bootstrap pooled ROC, ignoring covariates.
    Pooled {
        iterations: usize,
    },
}

impl EstimatorConfig {
    pub fn desk_bnp() -> Self {
        EstimatorConfig::Bnp {
            knots: 4,
            components: 10,
            nsim: DESK_NSIM,
            nburn: DESK_NBURN,
        }
    }

    pub fn desk_bsp() -> Self {
        EstimatorConfig::Bsp {
            nsim: DESK_NSIM,
            nburn: DESK_NBURN,
        }
    }

    pub fn paper_bnp() -> Self {
        EstimatorConfig::Bnp {
            knots: 4,
            components: 10,
            nsim: PAPER_NSIM,
            nburn: PAPER_NBURN,
        }
    }

    pub fn paper_bsp() -> Self {
        EstimatorConfig::Bsp {
            nsim: PAPER_NSIM,
            nburn: PAPER_NBURN,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EstimatorConfig::Bnp { .. } => "bnp",
            EstimatorConfig::Bsp { .. } => "bsp",
            EstimatorConfig::Kernel { .. } => "kernel",
            EstimatorConfig::Pooled { .. } => "pooled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub scenario: Scenario,
    pub sizes: SampleSizes,
    pub estimator: EstimatorConfig,
    pub replicates: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub level: f64,
}

impl StudyConfig {
    /// Desk-scale study: 50 replicates at (200, 200).
    pub fn desk(scenario: Scenario, estimator: EstimatorConfig) -> Self {
        Self {
            scenario,
            sizes: SampleSizes::default(),
            estimator,
            replicates: DESK_REPLICATES,
            seed: 2018,
            grid_points: 101,
            level: 0.95,
        }
    }

    /// Paper-scale study: 100 replicates; MCMC lengths come from `estimator`.
    pub fn paper_scale(scenario: Scenario, estimator: EstimatorConfig) -> Self {
        Self {
            replicates: PAPER_REPLICATES,
            ..Self::desk(scenario, estimator)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(ArocError::invalid("a study needs at least one replicate"));
        }
        if self.grid_points < 2 {
            return Err(ArocError::invalid("the FPF grid needs at least two points"));
        }
        if let EstimatorConfig::Kernel { .. } = self.estimator {
            if !self.scenario.supports_kernel() {
                return Err(ArocError::invalid(format!(
                    "the kernel estimator does not apply to scenario {}",
                    self.scenario
                )));
            }
        }
        Ok(())
    }
}

/// Scores of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub ermse: f64,
    pub aauc: f64,
    pub aauc_bias: f64,
    /// Share of grid points whose true value lies in the band.
    pub coverage: f64,
    pub aauc_covered: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lpml: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub error: String,
}

/// Table-style aggregate. ERMSE and bias are scaled by 100; coverages are
/// percentages (curve coverage averaged over the grid, then replicates).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub completed: usize,
    pub failed: usize,
    pub ermse_mean_x100: f64,
    pub ermse_sd_x100: f64,
    pub bias_mean_x100: f64,
    pub bias_sd_x100: f64,
    pub coverage_pct: f64,
    pub aauc_coverage_pct: f64,
    pub true_aauc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub summary: StudySummary,
    pub replicates: Vec<ReplicateOutcome>,
    pub failures: Vec<ReplicateFailure>,
}

impl StudyReport {
    /// One row per completed replicate.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("replicate,ermse,aauc,aauc_bias,coverage,aauc_covered,lpml,waic\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.replicates {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.replicate,
                r.ermse,
                r.aauc,
                r.aauc_bias,
                r.coverage,
                r.aauc_covered,
                opt(r.lpml),
                opt(r.waic)
            );
        }
        out
    }

    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Aggregate<'a> {
            scenario: Scenario,
            method: &'a str,
            sizes: SampleSizes,
            replicates: usize,
            #[serde(flatten)]
            summary: StudySummary,
        }
        serde_json::to_string_pretty(&Aggregate {
            scenario: self.config.scenario,
            method: self.config.estimator.label(),
            sizes: self.config.sizes,
            replicates: self.config.replicates,
            summary: self.summary,
        })
        .expect("summary serializes")
    }
}

/// Aggregates outcomes; order-independent because outcomes are sorted by
/// replicate index first.
pub fn summarize(outcomes: &[ReplicateOutcome], failed: usize, true_aauc: f64) -> StudySummary {
    let mut sorted = outcomes.to_vec();
    sorted.sort_by_key(|r| r.replicate);
    let ermse: Vec<f64> = sorted.iter().map(|r| r.ermse).collect();
    let bias: Vec<f64> = sorted.iter().map(|r| r.aauc_bias).collect();
    let cov: Vec<f64> = sorted.iter().map(|r| r.coverage).collect();
    let (em, es) = mean_sd(&ermse);
    let (bm, bs) = mean_sd(&bias);
    let n = sorted.len().max(1) as f64;
    StudySummary {
        completed: sorted.len(),
        failed,
        ermse_mean_x100: 100.0 * em,
        ermse_sd_x100: 100.0 * es,
        bias_mean_x100: 100.0 * bm,
        bias_sd_x100: 100.0 * bs,
        coverage_pct: 100.0 * mean_sd(&cov).0,
        aauc_coverage_pct: 100.0 * sorted.iter().filter(|r| r.aauc_covered).count() as f64 / n,
        true_aauc,
    }
}

/// Dataset of replicate `k`: drawn from child stream 0 of `(seed, k)`, so
/// every estimator run with the same seed sees the same data.
pub fn replicate_data(config: &StudyConfig, k: usize) -> Result<Dataset> {
    let mut rng = RngStream::new(config.seed, k as u64).child(0);
    generate_scenario(config.scenario, config.sizes, &mut rng)
}

struct Fitted {
    curve: CurveEstimate,
    aauc: ScalarEstimate,
    lpml: Option<f64>,
    waic: Option<f64>,
}

fn fit_regression(
    data: &Dataset,
    spec: &ModelSpec,
    components: usize,
    gibbs: GibbsConfig,
    grid: &[f64],
    level: f64,
    rng: &mut RngStream,
) -> Result<Fitted> {
    let q = Design::fit(spec, data.schema(), data.nondiseased())?.dim();
    let prior = PriorSpec::standard(q, components);
    let fit = gibbs_fit(data, spec, &prior, &gibbs, rng)?;
    let u = placement_values(&fit, data.diseased())?;
    let options = BootstrapOptions {
        level,
        ..BootstrapOptions::default()
    };
    let est = bb_aroc(&u, grid, &options, rng)?;
    let crit = waic(&fit, data.nondiseased())?;
    Ok(Fitted {
        curve: est.curve,
        aauc: est.aauc,
        lpml: Some(crit.lpml),
        waic: Some(crit.waic),
    })
}

fn fit_estimator(config: &StudyConfig, data: &Dataset, grid: &[f64], rng: &mut RngStream) -> Result<Fitted> {
    let sc = config.scenario;
    match config.estimator {
        EstimatorConfig::Bnp {
            knots,
            components,
            nsim,
            nburn,
        } => fit_regression(
            data,
            &sc.ddp_spec(knots),
            components,
            GibbsConfig::new(nsim, nburn),
            grid,
            config.level,
            rng,
        ),
        EstimatorConfig::Bsp { nsim, nburn } => fit_regression(
            data,
            &sc.linear_spec(),
            1,
            GibbsConfig::new(nsim, nburn),
            grid,
            config.level,
            rng,
        ),
        EstimatorConfig::Kernel { resamples } => {
            let options = KernelOptions {
                resamples,
                level: config.level,
            };
            let est = kernel_aroc(data, grid, &options, rng)?;
            Ok(Fitted {
                curve: est.curve,
                aauc: est.aauc,
                lpml: None,
                waic: None,
            })
        }
        EstimatorConfig::Pooled { iterations } => {
            let est = pooled_roc_bb(
                data.nondiseased().y(),
                data.diseased().y(),
                grid,
                iterations,
                config.level,
                rng,
            )?;
            Ok(Fitted {
                curve: est.curve,
                aauc: est.auc,
                lpml: None,
                waic: None,
            })
        }
    }
}

/// Runs replicate `k` against a precomputed truth.
pub fn run_replicate(config: &StudyConfig, truth: &TrueCurve, k: usize) -> Result<ReplicateOutcome> {
    let data = replicate_data(config, k)?;
    let mut rng = RngStream::new(config.seed, k as u64).child(1);
    let fitted = fit_estimator(config, &data, &truth.grid, &mut rng)?;
    let covered = band_coverage(&fitted.curve, truth)?;
    Ok(ReplicateOutcome {
        replicate: k,
        ermse: ermse(&fitted.curve, truth)?,
        aauc: fitted.aauc.mean,
        aauc_bias: fitted.aauc.mean - truth.aauc,
        coverage: coverage_fraction(&covered),
        aauc_covered: fitted.aauc.lower <= truth.aauc && truth.aauc <= fitted.aauc.upper,
        lpml: fitted.lpml,
        waic: fitted.waic,
    })
}

/// Runs every replicate (in parallel) and aggregates. Failed replicates are
/// listed and excluded from the summary; if all fail the study errors.
pub fn coverage_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let grid = fpf_grid(config.grid_points);
    let truth = true_aroc_curve(config.scenario, &grid)?;
    coverage_study_with_truth(config, &truth)
}

/// [`coverage_study`] against a supplied truth (e.g. one loaded from disk).
/// The truth must belong to the configured scenario and grid.
pub fn coverage_study_with_truth(config: &StudyConfig, truth: &TrueCurve) -> Result<StudyReport> {
    config.validate()?;
    if truth.scenario != config.scenario {
        return Err(ArocError::invalid(format!(
            "truth is for scenario {}, study is scenario {}",
            truth.scenario, config.scenario
        )));
    }
    truth.check_grid(&fpf_grid(config.grid_points))?;
    let truth = truth.clone();
    let results: Vec<Result<ReplicateOutcome>> = (0..config.replicates)
        .into_par_iter()
        .map(|k| run_replicate(config, &truth, k))
        .collect();
    let mut replicates = Vec::new();
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => replicates.push(o),
            Err(e) => failures.push(ReplicateFailure {
                replicate: k,
                error: e.to_string(),
            }),
        }
    }
    if replicates.is_empty() {
        return Err(ArocError::Numerical(format!(
            "all {} replicates failed; first error: {}",
            failures.len(),
            failures[0].error
        )));
    }
    let summary = summarize(&replicates, failures.len(), truth.aauc);
    Ok(StudyReport {
        config: *config,
        summary,
        replicates,
        failures,
    })
}
