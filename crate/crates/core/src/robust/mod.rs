//! Irregular sampling: site deletions, thinning, jitter and misspecified
//! truths, with the matching perturbation checks.

mod bounds;
mod experiments;
mod mask;
mod prune;

pub use bounds::{verify_deletion_bounds, DeletionReport};
pub use experiments::{
    deletion_scaling, input_error_exponent, jitter_experiment, misspecification_experiment, thinning_experiment,
    DeletionCell, JitterCell, JitterConfig, JitterTruth, MisspecCell, MisspecConfig, ThinningCell, ThinningConfig,
};
pub use mask::{retention_schedule, MaskOrigin, SiteMask};
pub use prune::{prune_and_qv, row_touches, PrunedQv};
