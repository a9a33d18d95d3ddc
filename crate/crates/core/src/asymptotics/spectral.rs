use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::filter::symbols::b_m;
use crate::gcmodel::{LatticeModel, LatticeSpectrum, TWO_PI};
use crate::special::gauss_legendre;
use crate::Exec;

use super::{CovPrediction, PredictionKind};

/// Controls for the dyadic spectral quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadSpec {
    /// Gauss–Legendre points per axis on each square cell.
    pub order: usize,
    /// Number of dyadic shells toward the origin.
    pub levels: usize,
    /// Alias truncation radius of the lattice spectrum.
    pub k_alias: usize,
    /// Relative tolerance between the `order` and `order + 8` rules.
    pub rel_tol: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { order: 16, levels: 40, k_alias: 10, rel_tol: 1e-6 }
    }
}

fn shell_integrals(spec: &LatticeSpectrum, m: usize, order: usize, levels: usize) -> [f64; 3] {
    let (x, w) = gauss_legendre(order);
    let cells: Vec<(f64, f64, f64)> = (0..levels)
        .flat_map(|k| {
            let h = PI * 0.5f64.powi(k as i32 + 1);
            [(h, 0.0, h), (0.0, h, h), (h, h, h)]
        })
        .collect();
    let parts = Exec::Parallel.map(cells.len(), |c| {
        let (a1, a2, h) = cells[c];
        let mut acc = [0.0; 3];
        for (xi, wi) in x.iter().zip(&w) {
            let l1 = a1 + 0.5 * h * (xi + 1.0);
            for (xj, wj) in x.iter().zip(&w) {
                let l2 = a2 + 0.5 * h * (xj + 1.0);
                let f = spec.filtered([l1, l2], m);
                let b = b_m([l1, l2], m);
                let ww = wi * wj * f * f;
                acc[0] += ww;
                acc[1] += ww * b;
                acc[2] += ww * b * b;
            }
        }
        let jac = 0.25 * h * h;
        [acc[0] * jac, acc[1] * jac, acc[2] * jac]
    });
    let mut tot = [0.0; 3];
    for p in parts.iter().rev() {
        for i in 0..3 {
            tot[i] += p[i];
        }
    }
    // 4 quadrants, doubled for the Gaussian fourth moment, and μ = dλ/(2π)².
    let k = 8.0 / (TWO_PI * TWO_PI);
    [tot[0] * k, tot[1] * k, tot[2] * k]
}

/// Limit `Σ_{ℓr} = 2∫ b_ℓ b_r F² dμ` with `F = |g_m|² f`, `b₁ = 1`, `b₂ = B_m`.
pub fn asymptotic_sigma(m: usize, model: &LatticeModel, quad: QuadSpec) -> Result<CovPrediction> {
    model.check_order(m)?;
    if quad.order < 2 || quad.levels == 0 {
        return Err(invalid("quadrature order must be at least 2 with one level"));
    }
    let phi2 = model.model.roughness();
    let spec = LatticeSpectrum::new(*model, quad.k_alias)?;
    let lo = shell_integrals(&spec, m, quad.order, quad.levels);
    let hi = shell_integrals(&spec, m, quad.order + 8, quad.levels);
    for i in 0..3 {
        let err = (hi[i] - lo[i]).abs() / hi[i].abs();
        if !(err <= quad.rel_tol) {
            return Err(Error::NoConvergence(format!(
                "spectral quadrature entry {i}: relative change {err:e} exceeds {:e}",
                quad.rel_tol
            )));
        }
    }
    let q1 = crate::fieldsim::filtered_cov([0, 0], m, 1, model)?;
    let q2 = q1 * 4f64.powf(phi2);
    Ok(CovPrediction {
        sigma_qq: [[hi[0], hi[1]], [hi[1], hi[2]]],
        scale: 1.0,
        q1,
        q2,
        m,
        kind: PredictionKind::Asymptotic,
    })
}

/// Riemann-sum analogue of the spectral covariance on the `n x n` torus:
/// `N Cov = (2/N) Σ b_ℓ b_r F²` and `q_ℓ = (1/N) Σ b_ℓ F` over the Fourier grid.
pub fn torus_cov_qq(n: usize, m: usize, model: &LatticeModel) -> Result<CovPrediction> {
    model.check_order(m)?;
    if n < 2 {
        return Err(Error::LatticeTooSmall { n, min: 2 });
    }
    let spec = LatticeSpectrum::with_default_alias(*model)?;
    let freq = |k: usize| {
        let x = TWO_PI * k as f64 / n as f64;
        if x > PI {
            x - TWO_PI
        } else {
            x
        }
    };
    let rows = Exec::Parallel.map(n, |i| {
        let mut acc = [0.0; 5];
        for j in 0..n {
            let lam = [freq(i), freq(j)];
            let f = spec.filtered(lam, m);
            let b = b_m(lam, m);
            acc[0] += f;
            acc[1] += b * f;
            acc[2] += f * f;
            acc[3] += b * f * f;
            acc[4] += b * b * f * f;
        }
        acc
    });
    let mut s = [0.0; 5];
    for r in &rows {
        for k in 0..5 {
            s[k] += r[k];
        }
    }
    let nn = (n * n) as f64;
    let c = |v: f64| 2.0 * v / nn;
    Ok(CovPrediction {
        sigma_qq: [[c(s[2]), c(s[3])], [c(s[3]), c(s[4])]],
        scale: nn,
        q1: s[0] / nn,
        q2: s[1] / nn,
        m,
        kind: PredictionKind::Torus { n },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::{estimator_cov, EstimatorScale};
    use crate::gcmodel::{CovModel, PowerLaw};

    fn pl(phi2: f64) -> LatticeModel {
        LatticeModel::unit(CovModel::PowerLaw(PowerLaw::new(1.0, phi2).unwrap()))
    }

    #[test]
    fn torus_sd_phi2_matches_reference() {
        let p = torus_cov_qq(40, 2, &pl(1.5)).unwrap();
        let e = estimator_cov(&p, EstimatorScale::LogPhi1).unwrap();
        assert!((e.sd2 - 2.2351).abs() < 5e-4, "{}", e.sd2);
    }

    #[test]
    fn asymptotic_means_and_symmetry() {
        let p = asymptotic_sigma(1, &pl(0.5), QuadSpec::default()).unwrap();
        assert!((p.q1 - crate::gcmodel::a_m(0.5, 1).unwrap()).abs() < 1e-9);
        let s = p.sigma_qq;
        assert!(s[0][0] > 0.0 && s[1][1] > 0.0 && s[0][1] * s[0][1] < s[0][0] * s[1][1]);
    }
}
