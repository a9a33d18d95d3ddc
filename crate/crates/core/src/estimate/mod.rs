//! Estimators of `(φ₁, φ₂)`: two-scale bilinear and Laplacian moments,
//! Whittle profile likelihood and exact REML.

mod laplacian;
mod mom;
pub mod optimize;
mod reml;
mod variogram;
mod whittle;

pub use laplacian::{a_laplacian, laplacian_estimate, laplacian_points, laplacian_qv};
pub use mom::{fd_transform, mom_estimate, phi2_in_domain, DomainMode, FdQuantities, MomEstimate, INTEGER_MARGIN};
pub use reml::{
    reml_estimate, s0_matrix, FisherInfo, RemlEstimate, RemlProblem, COARSE_STEP, FINE_STEP, FISHER_STEP,
    REML_SITE_CAP,
};
pub use variogram::{empirical_variogram, ls_slope};
pub use whittle::{
    likelihood_window, periodogram, AliasSum, whittle_estimate, whittle_mask_sensitivity, WhittleBatch, WhittleEstimate,
    DEFAULT_MASK_TAU, EDGE_DELTA, WHITTLE_K_ALIAS,
};
