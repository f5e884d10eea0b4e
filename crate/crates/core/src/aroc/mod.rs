//! Placement values, Bayesian-bootstrap AROC summaries, thresholds, and
//! pooled ROC baselines.

mod bootstrap;
mod placement;
mod pooled;
mod summary;
mod threshold;

pub use bootstrap::{aauc, bb_aroc, paauc, weighted_step_curve, ArocEstimate, BootstrapOptions, PartialArea};
pub use placement::{placement_values, PlacementMatrix};
pub use pooled::{empirical_auc, pooled_roc_bb, pooled_roc_emp, PooledEstimate};
pub use summary::{fpf_grid, CurveEstimate, ScalarEstimate};
pub use threshold::{covariate_threshold, threshold_draws};
