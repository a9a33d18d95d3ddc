use crate::error::{Error, Result};
use crate::filter::{QvStats, TrimMode};
use crate::gcmodel::stencil_gc_variance;
use crate::grid::Grid;

use super::mom::{moment_pair, DomainMode, MomEstimate};

/// Five-point Laplacian weights at unit separation.
pub fn laplacian_points() -> [([i64; 2], f64); 5] {
    [([0, 0], -4.0), ([1, 0], 1.0), ([-1, 0], 1.0), ([0, 1], 1.0), ([0, -1], 1.0)]
}

/// `E(Δ_[h] X)² / φ₁ = h^{2φ₂} a_Δ(φ₂)` under the unit-scale power law.
pub fn a_laplacian(phi2: f64, h: usize) -> f64 {
    (h as f64).powf(2.0 * phi2) * stencil_gc_variance(&laplacian_points(), phi2)
}

/// `Q_{Δ,h}`: mean of `(Δ_[h] X_t)²` over sites with all arms inside `Λ_n`.
pub fn laplacian_qv(x: &Grid, h: usize) -> Result<f64> {
    let n = x.side();
    if n <= 2 * h {
        return Err(Error::LatticeTooSmall { n, min: 2 * h + 1 });
    }
    let mut s = 0.0;
    for i in h..n - h {
        for j in h..n - h {
            let v = x.get(i + h, j) + x.get(i - h, j) + x.get(i, j + h) + x.get(i, j - h) - 4.0 * x.get(i, j);
            s += v * v;
        }
    }
    Ok(s / ((n - 2 * h) * (n - 2 * h)) as f64)
}

/// Two-scale Laplacian moment estimate. The five-point stencil annihilates
/// affine trends, so estimates in `(0, 2)` away from 1 are in domain.
pub fn laplacian_estimate(x: &Grid) -> Result<MomEstimate> {
    let n = x.side();
    if n <= 4 {
        return Err(Error::LatticeTooSmall { n, min: 5 });
    }
    let q1 = laplacian_qv(x, 1)?;
    let q2 = laplacian_qv(x, 2)?;
    let qv = QvStats::new(q1, q2, (n - 2) * (n - 2), (n - 4) * (n - 4), 1, TrimMode::PerStep)?;
    let (phi2_hat, phi1_hat, in_domain) = moment_pair(&qv, 2.0, |p| Ok(a_laplacian(p, 1)))?;
    Ok(MomEstimate {
        phi2_hat,
        phi1_hat,
        log_phi1_hat: phi1_hat.map(f64::ln),
        qv,
        m: 1,
        domain_mode: DomainMode::Increasing,
        fd_tau1_hat: None,
        in_domain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_and_positivity() {
        for phi2 in [0.2, 0.5, 0.8, 1.3] {
            let a1 = a_laplacian(phi2, 1);
            assert!(a1 > 0.0);
            assert!((a_laplacian(phi2, 2) / a1 - 4f64.powf(phi2)).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_field_is_annihilated() {
        let x = Grid::from_fn(9, |i, j| 2.0 + 0.5 * i as f64 - 1.5 * j as f64);
        assert_eq!(laplacian_qv(&x, 1).unwrap(), 0.0);
        assert_eq!(laplacian_qv(&x, 2).unwrap(), 0.0);
    }
}
