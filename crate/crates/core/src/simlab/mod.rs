//! Simulation scenarios, ground-truth oracles and study harness.

mod concavity;
mod metrics;
mod scenario;
mod study;
mod truth;

pub use concavity::{concavity_inequality_check, ConcavityReport, LinearNormalConfig, LinearNormalGroup};
pub use metrics::{band_coverage, coverage_fraction, ermse, ermse_values};
pub use scenario::{generate_scenario, SampleSizes, Scenario, DISEASED_SD, NONDISEASED_SD};
pub use study::{
    coverage_study, coverage_study_with_truth, replicate_data, run_replicate, summarize, EstimatorConfig,
    ReplicateFailure, ReplicateOutcome, StudyConfig, StudyReport, StudySummary, DESK_NBURN, DESK_NSIM, DESK_REPLICATES,
    PAPER_NBURN, PAPER_NSIM, PAPER_REPLICATES,
};
pub use truth::{
    binormal_scenario_one, true_aauc, true_aauc_mc, true_aroc, true_aroc_curve, true_aroc_curve_cached, true_aroc_mc,
    TrueCurve, ORACLE_DRAWS, ORACLE_SEED, ORACLE_VERSION,
};
