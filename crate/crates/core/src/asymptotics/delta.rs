use std::f64::consts::LN_2;

use crate::error::{invalid, Error, Result};
use crate::gcmodel::{a_m, a_m_prime};

use super::{sandwich, CovPrediction};

/// `s = 1/(2 ln 2)`, the derivative of `½ log₂ x` times `x`.
pub const S_LOG2: f64 = 0.5 / LN_2;

/// Jacobian of `(q₁, q₂) ↦ (φ₁, φ₂)` for the two-scale moment map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jacobian {
    pub j: [[f64; 2]; 2],
    /// Implied `φ₁` and `φ₂` at the evaluation point.
    pub phi1: f64,
    pub phi2: f64,
}

impl Jacobian {
    /// Ratio form `K = diag(1/φ₁, 1) J`, the Jacobian of `(log φ₁, φ₂)`.
    pub fn ratio_form(&self) -> [[f64; 2]; 2] {
        let j = self.j;
        [[j[0][0] / self.phi1, j[0][1] / self.phi1], j[1]]
    }
}

/// Jacobian at `(q₁, q₂)` with `A = a_m(φ₂)` and `φ₂ = ½ log₂(q₂/q₁)`.
pub fn delta_jacobian(q1: f64, q2: f64, m: usize) -> Result<Jacobian> {
    if !(q1 > 0.0 && q2 > 0.0) {
        return Err(invalid(format!("reference means must be positive, got ({q1}, {q2})")));
    }
    let phi2 = 0.5 * (q2 / q1).log2();
    let a = a_m(phi2, m)?;
    let ap = a_m_prime(phi2, m)?;
    let s = S_LOG2;
    let j = [
        [1.0 / a + s * ap / (a * a), -s * ap / (a * a) * (q1 / q2)],
        [-s / q1, s / q2],
    ];
    Ok(Jacobian { j, phi1: q1 / a, phi2 })
}

/// Which parametrization the estimator covariance refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorScale {
    /// `(φ̂₁, φ̂₂)`.
    Raw,
    /// `(log φ̂₁, φ̂₂)`.
    LogPhi1,
    /// `(φ̂₁/φ₁, φ̂₂)`, first-order equal to the log form.
    Ratio,
}

/// Delta-method covariance `Ω` with its summary statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorCov {
    pub jacobian: [[f64; 2]; 2],
    pub omega: [[f64; 2]; 2],
    /// Scaled standard deviations and correlation.
    pub sd1: f64,
    pub sd2: f64,
    pub corr: f64,
}

/// `Ω = J Σ Jᵀ` (or `K Σ Kᵀ`) from a covariance prediction.
pub fn estimator_cov(pred: &CovPrediction, scale: EstimatorScale) -> Result<EstimatorCov> {
    let s = pred.sigma_qq;
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    if !(s[0][0] >= 0.0 && s[1][1] >= 0.0 && det >= -1e-12 * s[0][0] * s[1][1]) {
        return Err(Error::Numeric("covariance of the quadratic variations is not PSD".into()));
    }
    let jac = delta_jacobian(pred.q1, pred.q2, pred.m)?;
    let j = match scale {
        EstimatorScale::Raw => jac.j,
        EstimatorScale::LogPhi1 | EstimatorScale::Ratio => jac.ratio_form(),
    };
    let mut omega = sandwich(j, s);
    let off = 0.5 * (omega[0][1] + omega[1][0]);
    omega[0][1] = off;
    omega[1][0] = off;
    let sd1 = omega[0][0].max(0.0).sqrt();
    let sd2 = omega[1][1].max(0.0).sqrt();
    Ok(EstimatorCov { jacobian: j, omega, sd1, sd2, corr: off / (sd1 * sd2) })
}

/// Fixed-domain covariance forms at sample size `N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdPrediction {
    /// Covariance of `(log(N^{τ̂₂} τ̂₁ / φ₁), τ̂₂ − τ₂)`, scaled like `Ω`.
    pub unstabilized: [[f64; 2]; 2],
    /// Covariance after the `A_N` transform; equals `Ω`.
    pub stabilized: [[f64; 2]; 2],
    pub corr_unstabilized: f64,
    pub log_n: f64,
}

/// `A_N⁻¹ = [[1, log N], [0, 1]]` couples the log-scale error with `τ̂₂`.
pub fn fd_predictions(omega: [[f64; 2]; 2], n_sites: f64) -> FdPrediction {
    let log_n = n_sites.ln();
    let b = [[1.0, log_n], [0.0, 1.0]];
    let u = sandwich(b, omega);
    let corr = u[0][1] / (u[0][0] * u[1][1]).sqrt();
    FdPrediction { unstabilized: u, stabilized: omega, corr_unstabilized: corr, log_n }
}

/// Condition number of a symmetric positive 2x2 matrix.
pub fn condition_number(a: [[f64; 2]; 2]) -> f64 {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let hi = 0.5 * tr + disc;
    let lo = 0.5 * tr - disc;
    hi / lo
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(q1: f64, q2: f64, m: usize) -> [f64; 2] {
        let phi2 = 0.5 * (q2 / q1).log2();
        [q1 / a_m(phi2, m).unwrap(), phi2]
    }

    #[test]
    fn jacobian_matches_central_differences() {
        for (phi2, m) in [(0.5, 1), (0.8, 1), (1.5, 2)] {
            let q1 = a_m(phi2, m).unwrap();
            let q2 = q1 * 4f64.powf(phi2);
            let jac = delta_jacobian(q1, q2, m).unwrap();
            for (k, q) in [q1, q2].iter().enumerate() {
                let h = q * 1e-5;
                let (p, n) = if k == 0 { (map(q1 + h, q2, m), map(q1 - h, q2, m)) } else { (map(q1, q2 + h, m), map(q1, q2 - h, m)) };
                for i in 0..2 {
                    let fd = (p[i] - n[i]) / (2.0 * h);
                    assert!((fd - jac.j[i][k]).abs() < 1e-6 * jac.j[i][k].abs().max(1e-3), "{i}{k}");
                }
            }
            assert!((jac.j[1][0] * q1 + jac.j[1][1] * q2).abs() < 1e-14);
        }
    }

    #[test]
    fn stabilized_equals_omega() {
        let om = [[2.0, 0.5], [0.5, 1.0]];
        let a = fd_predictions(om, 900.0);
        let b = fd_predictions(om, 3600.0);
        assert_eq!(a.stabilized, om);
        assert!(a.corr_unstabilized > 0.9);
        assert!(condition_number(b.unstabilized) > condition_number(a.unstabilized));
    }
}
