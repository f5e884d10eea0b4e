//! Truncated B-splines dependent Dirichlet process mixture of normals.

mod gibbs;
mod mixture;
mod prior;

pub use gibbs::{
    cond_cdf, gibbs_fit, gibbs_sample, update_allocations, update_components, update_hyperparams, update_mean,
    update_precision, update_stick_weights, FitDiagnostics, FitResult, GibbsConfig, Observations, PosteriorDraw,
};
pub use mixture::Mixture;
pub use prior::{prior_expected_clusters, truncation_bound, PriorSpec};
