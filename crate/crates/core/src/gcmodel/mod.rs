//! Power-law generalized covariances, Matérn covariances, their spectra, and
//! the stencil scale function `a_m`.

mod scale;
mod spectrum;

pub use scale::{a_m, a_m_brute_force, a_m_prime, a_one_closed_form, stencil_gc_variance};
pub use spectrum::{
    continuum_density, domination_check, power_law_spectral_constant, DominationReport,
    LatticeSpectrum, DEFAULT_K_ALIAS,
};

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::special::{bessel_k, gamma};

/// Distance from the nearest integer below which φ₂ counts as integer.
pub const INTEGER_GUARD: f64 = 1e-9;

/// Power-law generalized covariance `K(h) = φ₁ Γ(−φ₂) ‖h‖^{2φ₂}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLaw {
    phi1: f64,
    phi2: f64,
    gamma_neg: f64,
}

impl PowerLaw {
    pub fn new(phi1: f64, phi2: f64) -> Result<Self> {
        if !(phi1.is_finite() && phi1 > 0.0) {
            return Err(invalid(format!("phi1 must be positive, got {phi1}")));
        }
        if !(phi2.is_finite() && phi2 > 0.0) {
            return Err(invalid(format!("phi2 must be positive, got {phi2}")));
        }
        if (phi2 - phi2.round()).abs() < INTEGER_GUARD {
            return Err(invalid(format!("integer phi2 = {phi2} is a pole of Γ(−φ₂)")));
        }
        Ok(Self { phi1, phi2, gamma_neg: gamma(-phi2) })
    }

    pub fn phi1(&self) -> f64 {
        self.phi1
    }

    pub fn phi2(&self) -> f64 {
        self.phi2
    }

    /// Order k of the intrinsic random function, ⌊φ₂⌋.
    pub fn order_k(&self) -> usize {
        self.phi2.floor() as usize
    }

    /// Γ(−φ₂), negative on (0,1) and positive on (1,2).
    pub fn gamma_neg(&self) -> f64 {
        self.gamma_neg
    }

    pub fn with_phi1(&self, phi1: f64) -> Result<Self> {
        Self::new(phi1, self.phi2)
    }

    /// Generalized covariance at distance `r`.
    #[inline]
    pub fn gc_r(&self, r: f64) -> f64 {
        if r == 0.0 {
            0.0
        } else {
            self.phi1 * self.gamma_neg * r.powf(2.0 * self.phi2)
        }
    }

    /// Generalized covariance at lag `h`.
    pub fn gc(&self, h: [f64; 2]) -> Result<f64> {
        if !(h[0].is_finite() && h[1].is_finite()) {
            return Err(invalid("non-finite lag"));
        }
        Ok(self.gc_r(h[0].hypot(h[1])))
    }

    /// `φ₁ |Γ(−φ₂)| r^{2φ₂}`.
    pub fn semivariogram(&self, r: f64) -> Result<f64> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(invalid(format!("distance must be nonnegative, got {r}")));
        }
        Ok(self.phi1 * self.gamma_neg.abs() * r.powf(2.0 * self.phi2))
    }
}

/// Integer-exponent generalized covariance
/// `K(h) = 2 φ₁ (−1)^{k+1} / k! · ‖h‖^{2k} log ‖h‖`, a standalone formula
/// evaluator (integer exponents are rejected by [`PowerLaw`]).
pub fn gc_integer_log_form(phi1: f64, k: u32, h: [f64; 2]) -> f64 {
    let r = h[0].hypot(h[1]);
    if r == 0.0 {
        return 0.0;
    }
    let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
    let fact: f64 = (1..=k).map(f64::from).product();
    2.0 * phi1 * sign / fact * r.powi(2 * k as i32) * r.ln()
}

/// Matérn covariance parameters with `κ = √(2ν)/ρ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matern {
    sigma2: f64,
    nu: f64,
    rho: f64,
    kappa: f64,
    norm: f64,
}

/// Small-lag coefficients of a Matérn covariance:
/// `C(0) − C(r) = c_mat r^{2ν} − a_mat r² + o(r²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentPl {
    pub c_mat: f64,
    pub a_mat: f64,
}

impl Matern {
    pub fn new(sigma2: f64, nu: f64, rho: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(invalid(format!("sigma2 must be positive, got {sigma2}")));
        }
        if !(nu > 0.0 && nu < 1.0) {
            return Err(invalid(format!("nu must lie in (0,1), got {nu}")));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(invalid(format!("rho must be positive, got {rho}")));
        }
        let kappa = (2.0 * nu).sqrt() / rho;
        let norm = sigma2 * 2f64.powf(1.0 - nu) / gamma(nu);
        Ok(Self { sigma2, nu, rho, kappa, norm })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Covariance at distance `r`, assumed nonnegative.
    #[inline]
    pub fn cov_r(&self, r: f64) -> f64 {
        if r == 0.0 {
            return self.sigma2;
        }
        let x = self.kappa * r;
        if x > 700.0 {
            return 0.0;
        }
        self.norm * x.powf(self.nu) * bessel_k(self.nu, x)
    }

    pub fn cov(&self, r: f64) -> Result<f64> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(invalid(format!("distance must be nonnegative, got {r}")));
        }
        Ok(self.cov_r(r))
    }

    pub fn tangent(&self) -> TangentPl {
        let (s, k, nu) = (self.sigma2, self.kappa, self.nu);
        TangentPl {
            c_mat: s * k.powf(2.0 * nu) * gamma(-nu).abs() / (2f64.powf(2.0 * nu) * gamma(nu)),
            a_mat: s * k * k / (4.0 * (1.0 - nu)),
        }
    }

    /// The power law whose semivariogram matches `c_mat r^{2ν}`.
    pub fn tangent_power_law(&self) -> PowerLaw {
        let c = self.tangent().c_mat;
        PowerLaw::new(c / gamma(-self.nu).abs(), self.nu).expect("nu in (0,1)")
    }
}

/// A covariance family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CovModel {
    PowerLaw(PowerLaw),
    Matern(Matern),
}

impl CovModel {
    /// Kernel whose stencil-weighted double sums give filtered covariances:
    /// the generalized covariance for power laws, the covariance for Matérn.
    #[inline]
    pub fn kernel_r(&self, r: f64) -> f64 {
        match self {
            CovModel::PowerLaw(p) => p.gc_r(r),
            CovModel::Matern(q) => q.cov_r(r),
        }
    }

    /// Smoothness exponent: φ₂ or ν.
    pub fn roughness(&self) -> f64 {
        match self {
            CovModel::PowerLaw(p) => p.phi2(),
            CovModel::Matern(q) => q.nu(),
        }
    }
}

/// Whether a field lives on the unit lattice or on the grid `t/n` in `[0,1]²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Increasing,
    Fixed { n: usize },
}

impl Domain {
    pub fn spacing(&self) -> f64 {
        match *self {
            Domain::Increasing => 1.0,
            Domain::Fixed { n } => 1.0 / n as f64,
        }
    }
}

/// A covariance model observed on a square lattice with the given spacing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeModel {
    pub model: CovModel,
    pub spacing: f64,
}

impl LatticeModel {
    pub fn new(model: CovModel, domain: Domain) -> Self {
        Self { model, spacing: domain.spacing() }
    }

    pub fn unit(model: CovModel) -> Self {
        Self { model, spacing: 1.0 }
    }

    /// Kernel at lattice distance `r` (in index units).
    #[inline]
    pub fn kernel_r(&self, r: f64) -> f64 {
        self.model.kernel_r(r * self.spacing)
    }

    /// Smallest stencil order for which filtered values are stationary.
    pub fn min_order(&self) -> usize {
        match self.model {
            CovModel::PowerLaw(p) => p.order_k() + 1,
            CovModel::Matern(_) => 1,
        }
    }

    pub fn check_order(&self, m: usize) -> Result<()> {
        if m < self.min_order() {
            return Err(Error::InvalidParameter(format!(
                "stencil order {m} cannot stationarize roughness {}",
                self.model.roughness()
            )));
        }
        if let CovModel::PowerLaw(p) = self.model {
            if p.phi2() >= m as f64 {
                return Err(invalid(format!("phi2 = {} outside (0, {m})", p.phi2())));
            }
        }
        Ok(())
    }
}

/// ‖h‖ for an integer lag.
#[inline]
pub(crate) fn norm_i(h: [i64; 2]) -> f64 {
    ((h[0] * h[0] + h[1] * h[1]) as f64).sqrt()
}

pub(crate) const TWO_PI: f64 = 2.0 * PI;
