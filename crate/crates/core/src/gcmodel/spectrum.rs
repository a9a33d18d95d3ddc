use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::filter::symbols;
use crate::special::{gamma, gauss_legendre};

use super::{CovModel, LatticeModel, Matern, TWO_PI};

/// Default truncation radius of the aliasing sum.
pub const DEFAULT_K_ALIAS: usize = 30;

/// Constant `c` with `f(λ) = c φ₁ ‖λ‖^{−(2+2φ₂)}` the spectral density of the
/// power law with respect to `(2π)^{−2} dλ` in angular frequency.
pub fn power_law_spectral_constant(phi2: f64) -> f64 {
    4.0 * PI * 2f64.powf(2.0 * phi2) * gamma(1.0 + phi2)
}

fn matern_constant(q: &Matern) -> f64 {
    4.0 * PI * q.nu() * q.sigma2() * q.kappa().powf(2.0 * q.nu())
}

/// Continuum spectral density at angular frequency `lambda` against
/// `(2π)^{−2} dλ`.
pub fn continuum_density(lambda: [f64; 2], model: &CovModel) -> Result<f64> {
    let r2 = lambda[0] * lambda[0] + lambda[1] * lambda[1];
    match model {
        CovModel::PowerLaw(p) => {
            if r2 == 0.0 {
                return Err(Error::Numeric("power-law spectral density is singular at 0".into()));
            }
            Ok(power_law_spectral_constant(p.phi2()) * p.phi1() * r2.powf(-(1.0 + p.phi2())))
        }
        CovModel::Matern(q) => {
            let k2 = q.kappa() * q.kappa();
            Ok(matern_constant(q) * (k2 + r2).powf(-(1.0 + q.nu())))
        }
    }
}

/// Spectral density of a lattice-sampled field, `f(λ) = Σ_k f_s(λ + 2πk)`,
/// truncated at `‖k‖∞ ≤ K` with a second-order tail correction.
#[derive(Clone, Debug)]
pub struct LatticeSpectrum {
    model: LatticeModel,
    k_alias: usize,
    coef: f64,
    // exponent p in (κ² + ‖ω‖²)^{−p/2}
    p: f64,
    kappa2: f64,
    tail_p: f64,
    tail_p2: f64,
}

// ∫ over ‖x‖∞ > a of ‖x‖^{−q} dx
fn outer_integral(q: f64, a: f64) -> f64 {
    let (x, w) = gauss_legendre(24);
    let half = PI / 8.0;
    let ang: f64 = x
        .iter()
        .zip(&w)
        .map(|(&x, &w)| w * half * (half * (x + 1.0)).cos().powf(q - 2.0))
        .sum();
    8.0 * a.powf(2.0 - q) / (q - 2.0) * ang
}

impl LatticeSpectrum {
    pub fn new(model: LatticeModel, k_alias: usize) -> Result<Self> {
        if k_alias < 1 {
            return Err(invalid("aliasing radius must be at least 1"));
        }
        let s = model.spacing;
        let (coef, p, kappa2) = match model.model {
            CovModel::PowerLaw(pl) => (
                power_law_spectral_constant(pl.phi2()) * pl.phi1() * s.powf(2.0 * pl.phi2()),
                2.0 + 2.0 * pl.phi2(),
                0.0,
            ),
            CovModel::Matern(q) => {
                let ks = q.kappa() * s;
                (4.0 * PI * q.nu() * q.sigma2() * ks.powf(2.0 * q.nu()), 2.0 + 2.0 * q.nu(), ks * ks)
            }
        };
        let a = (2 * k_alias + 1) as f64 * PI;
        Ok(Self {
            model,
            k_alias,
            coef,
            p,
            kappa2,
            tail_p: outer_integral(p, a),
            tail_p2: outer_integral(p + 2.0, a),
        })
    }

    pub fn with_default_alias(model: LatticeModel) -> Result<Self> {
        Self::new(model, DEFAULT_K_ALIAS)
    }

    pub fn model(&self) -> &LatticeModel {
        &self.model
    }

    pub fn k_alias(&self) -> usize {
        self.k_alias
    }

    /// Density at `lambda`; errors at the power-law singularity.
    pub fn eval(&self, lambda: [f64; 2]) -> Result<f64> {
        if !(lambda[0].is_finite() && lambda[1].is_finite()) {
            return Err(invalid("non-finite frequency"));
        }
        if self.kappa2 == 0.0 && lambda[0] == 0.0 && lambda[1] == 0.0 {
            return Err(Error::Numeric("power-law lattice spectrum is singular at 0".into()));
        }
        Ok(self.eval_unchecked(lambda))
    }

    /// Density without the singularity check.
    pub fn eval_unchecked(&self, lambda: [f64; 2]) -> f64 {
        self.partial_sum(lambda, self.k_alias) + self.tail(lambda)
    }

    /// Truncated aliasing sum without tail correction.
    pub fn partial_sum(&self, lambda: [f64; 2], k: usize) -> f64 {
        let k = k as i64;
        let e = -0.5 * self.p;
        let mut s = 0.0;
        for k1 in -k..=k {
            let x1 = lambda[0] + TWO_PI * k1 as f64;
            let x1s = x1 * x1 + self.kappa2;
            for k2 in -k..=k {
                let x2 = lambda[1] + TWO_PI * k2 as f64;
                s += (x1s + x2 * x2).powf(e);
            }
        }
        self.coef * s
    }

    fn tail(&self, lambda: [f64; 2]) -> f64 {
        let r2 = lambda[0] * lambda[0] + lambda[1] * lambda[1];
        let p = self.p;
        let corr = (r2 / 4.0 - PI * PI / 6.0) * p * p - 0.5 * p * self.kappa2;
        self.coef / (4.0 * PI * PI) * (self.tail_p + corr * self.tail_p2)
    }

    /// `|g_m(λ)|² f(λ)`, the density of the step-one filtered field, set to 0
    /// where the symbol vanishes.
    pub fn filtered(&self, lambda: [f64; 2], m: usize) -> f64 {
        let g2 = symbols::g_abs2(lambda, m, 1);
        if g2 == 0.0 {
            0.0
        } else {
            g2 * self.eval_unchecked(lambda)
        }
    }
}

/// Outcome of the Matérn versus tangent-power-law spectral comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct DominationReport {
    pub points: usize,
    pub violations: usize,
    /// Largest observed `lhs / rhs` over points with nonzero right side.
    pub max_ratio: f64,
}

impl DominationReport {
    pub fn all_pass(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `|g_m|² f_Mat ≤ |g_m|² f_PL` for the tangent power law on a
/// `grid x grid` set of torus frequencies `2π(i − ⌊grid/2⌋)/grid`.
pub fn domination_check(q: &Matern, m: usize, spacing: f64, grid: usize) -> Result<DominationReport> {
    let mat = LatticeSpectrum::new(
        LatticeModel { model: CovModel::Matern(*q), spacing },
        DEFAULT_K_ALIAS,
    )?;
    let pl = LatticeSpectrum::new(
        LatticeModel { model: CovModel::PowerLaw(q.tangent_power_law()), spacing },
        DEFAULT_K_ALIAS,
    )?;
    let half = (grid / 2) as f64;
    let mut report = DominationReport { points: 0, violations: 0, max_ratio: 0.0 };
    for i in 0..grid {
        for j in 0..grid {
            let lam = [TWO_PI * (i as f64 - half) / grid as f64, TWO_PI * (j as f64 - half) / grid as f64];
            let lhs = mat.filtered(lam, m);
            let rhs = pl.filtered(lam, m);
            report.points += 1;
            if rhs > 0.0 {
                report.max_ratio = report.max_ratio.max(lhs / rhs);
            }
            if lhs > rhs * (1.0 + 1e-12) {
                report.violations += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcmodel::{a_m, PowerLaw};
    use approx::assert_relative_eq;

    fn pl(phi1: f64, phi2: f64) -> LatticeModel {
        LatticeModel::unit(CovModel::PowerLaw(PowerLaw::new(phi1, phi2).unwrap()))
    }

    #[test]
    fn homogeneity_and_symmetry() {
        let m = CovModel::PowerLaw(PowerLaw::new(1.0, 0.5).unwrap());
        let a = continuum_density([0.3, 0.4], &m).unwrap();
        let b = continuum_density([0.6, 0.8], &m).unwrap();
        assert_relative_eq!(b, a * 2f64.powf(-3.0), max_relative = 1e-14);
        assert!(continuum_density([0.0, 0.0], &m).is_err());
        let s = LatticeSpectrum::with_default_alias(pl(1.0, 0.7)).unwrap();
        let f = s.eval([0.4, 1.1]).unwrap();
        assert_relative_eq!(f, s.eval([1.1, 0.4]).unwrap(), max_relative = 1e-13);
        assert_relative_eq!(f, s.eval([-0.4, 1.1]).unwrap(), max_relative = 1e-13);
        assert!(s.eval([0.0, 0.0]).is_err());
    }

    #[test]
    fn tail_corrected_sum_matches_long_direct_sum() {
        for phi2 in [0.1, 0.5, 0.8, 1.5] {
            let s = LatticeSpectrum::with_default_alias(pl(1.0, phi2)).unwrap();
            for lam in [[PI, PI], [PI / 2.0, PI / 2.0], [0.1, 2.0], [1e-3, 0.0]] {
                let reference = s.partial_sum(lam, 400) + s.tail_only_at(lam, 400);
                let got = s.eval_unchecked(lam);
                assert!(((got - reference) / reference).abs() < 1e-8, "phi2={phi2} lam={lam:?}");
            }
        }
    }

    #[test]
    fn near_origin_dominated_by_central_term() {
        let model = pl(1.0, 0.5);
        let s = LatticeSpectrum::with_default_alias(model).unwrap();
        let lam = [1e-3 / 2f64.sqrt(), 1e-3 / 2f64.sqrt()];
        let f0 = continuum_density(lam, &model.model).unwrap();
        let f = s.eval(lam).unwrap();
        assert!(f >= f0);
        assert!((f / f0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn partial_sums_increase() {
        let s = LatticeSpectrum::with_default_alias(pl(1.0, 0.5)).unwrap();
        let lam = [PI / 2.0, PI / 2.0];
        let mut prev = 0.0;
        for k in 1..12 {
            let v = s.partial_sum(lam, k);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn torus_integral_of_filtered_density_is_variance() {
        // (2π)^{-2} ∫ |g|² f dλ must equal Var(D X) = φ₁ a_m(φ₂).
        for (phi2, m) in [(0.5, 1), (1.5, 2)] {
            let s = LatticeSpectrum::new(pl(1.0, phi2), 10).unwrap();
            let k = 400;
            let mut acc = 0.0;
            for i in 0..k {
                for j in 0..k {
                    let lam = [
                        -PI + TWO_PI * (i as f64 + 0.5) / k as f64,
                        -PI + TWO_PI * (j as f64 + 0.5) / k as f64,
                    ];
                    acc += s.filtered(lam, m);
                }
            }
            let integral = acc / (k * k) as f64;
            assert_relative_eq!(integral, a_m(phi2, m).unwrap(), max_relative = 2e-3);
        }
    }

    #[test]
    fn matern_half_inverts_to_exponential() {
        // C(r) = (2π)^{-1} ∫ f(ω) J0(ω r) ω dω with J0 by its integral form.
        let q = Matern::new(1.0, 0.5, 1.0).unwrap();
        let model = CovModel::Matern(q);
        let (gx, gw) = gauss_legendre(40);
        let j0 = |x: f64| -> f64 {
            gx.iter().zip(&gw).map(|(&t, &w)| w * (x * (0.5 * PI * (t + 1.0)).sin()).cos()).sum::<f64>()
                * 0.5
        };
        for r in [0.0, 0.5, 1.0, 1.5, 2.0] {
            // Integrate on [0, W] panel-wise; tail beyond W is O(W^{-1.5}) in magnitude.
            let (px, pw) = gauss_legendre(16);
            let panels = 20_000;
            let width = 0.05;
            let mut acc = 0.0;
            for k in 0..panels {
                let a = k as f64 * width;
                for (&t, &w) in px.iter().zip(&pw) {
                    let om = a + 0.5 * width * (t + 1.0);
                    let f = continuum_density([om, 0.0], &model).unwrap();
                    acc += 0.5 * width * w * f * j0(om * r) * om;
                }
            }
            let c = acc / TWO_PI;
            assert!((c - q.cov_r(r)).abs() < 2e-3, "r={r}: {c} vs {}", q.cov_r(r));
        }
    }

    #[test]
    fn domination_all_pass() {
        for nu in [0.3, 0.5, 0.8] {
            for m in [1, 2] {
                let q = Matern::new(1.0, nu, 1.0).unwrap();
                let rep = domination_check(&q, m, 1.0, 101).unwrap();
                assert!(rep.all_pass(), "nu={nu} m={m}: {rep:?}");
                assert_eq!(rep.points, 101 * 101);
            }
        }
    }

    impl LatticeSpectrum {
        fn tail_only_at(&self, lambda: [f64; 2], k: usize) -> f64 {
            let mut other = self.clone();
            let a = (2 * k + 1) as f64 * PI;
            other.tail_p = outer_integral(self.p, a);
            other.tail_p2 = outer_integral(self.p + 2.0, a);
            other.tail(lambda)
        }
    }
}
