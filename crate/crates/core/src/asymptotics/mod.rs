//! Exact and asymptotic covariances of the quadratic variations and of the
//! derived estimators.

mod delta;
mod dense;
mod finite;
mod matern;
mod spectral;

pub use delta::{
    condition_number, delta_jacobian, estimator_cov, fd_predictions, EstimatorCov, EstimatorScale, FdPrediction,
    Jacobian, S_LOG2,
};
pub use dense::dense_cov_qq;
pub use finite::{finite_cov_qq, trimming_variance, FiniteLatticeEngine, Level, QuadForm, FINITE_SIDE_CAP};
pub use matern::{matern_fd_means, MaternMeans};
pub use spectral::{asymptotic_sigma, torus_cov_qq, QuadSpec};

use crate::filter::TrimMode;

/// Provenance of a covariance prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredictionKind {
    /// Exact on the `n x n` lattice, scaled by the step-two interior size.
    FiniteLattice { n: usize, trim: TrimMode },
    /// Riemann sum over the Fourier grid of the `n x n` torus, scaled by `n²`.
    Torus { n: usize },
    /// Spectral integral limit.
    Asymptotic,
}

impl PredictionKind {
    pub fn tag(&self) -> &'static str {
        match self {
            PredictionKind::FiniteLattice { .. } => "finite-lattice",
            PredictionKind::Torus { .. } => "torus",
            PredictionKind::Asymptotic => "asymptotic",
        }
    }
}

/// Scaled covariance of `(Q₁, Q₂)` with the reference means.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovPrediction {
    /// Covariance of `√M (Q₁ − q₁, Q₂ − q₂)`.
    pub sigma_qq: [[f64; 2]; 2],
    /// The `M` used in the scaling.
    pub scale: f64,
    pub q1: f64,
    pub q2: f64,
    pub m: usize,
    pub kind: PredictionKind,
}

impl CovPrediction {
    /// Unscaled covariance of `(Q₁, Q₂)`.
    pub fn raw_cov(&self) -> [[f64; 2]; 2] {
        let s = self.sigma_qq;
        let k = self.scale;
        [[s[0][0] / k, s[0][1] / k], [s[1][0] / k, s[1][1] / k]]
    }

    pub fn corr_qq(&self) -> f64 {
        let s = self.sigma_qq;
        s[0][1] / (s[0][0] * s[1][1]).sqrt()
    }
}

pub(crate) fn mat2_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub(crate) fn transpose2(a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// `a s aᵀ`.
pub(crate) fn sandwich(a: [[f64; 2]; 2], s: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    mat2_mul(mat2_mul(a, s), transpose2(a))
}

/// Second-order approximation of `E[Q₂/Q₁]`:
/// `(q₂/q₁)(1 + Var Q₁/q₁² − Cov(Q₁,Q₂)/(q₁q₂))`.
pub fn taylor_ratio_mean(pred: &CovPrediction) -> f64 {
    let c = pred.raw_cov();
    let (q1, q2) = (pred.q1, pred.q2);
    (q2 / q1) * (1.0 + c[0][0] / (q1 * q1) - c[0][1] / (q1 * q2))
}
