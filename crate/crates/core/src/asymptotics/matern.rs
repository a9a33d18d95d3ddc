use crate::error::{invalid, Result};
use crate::fieldsim::filtered_cov;
use crate::gcmodel::{a_m, CovModel, Domain, LatticeModel, Matern};

/// Exact and leading-order fixed-domain means of the quadratic variations
/// under a Matérn truth observed on the `n x n` grid of `[0,1]²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaternMeans {
    pub exact_q1: f64,
    pub exact_q2: f64,
    /// `φ₁^tan a_m(ν) j^{2ν} n^{−2ν}`.
    pub leading_q1: f64,
    pub leading_q2: f64,
    /// Limit of `n^{2φ̂₂} φ̂₁`, the tangent power-law coefficient.
    pub kappa_nu: f64,
}

impl MaternMeans {
    pub fn ratio(&self) -> f64 {
        self.exact_q2 / self.exact_q1
    }

    pub fn remainder1(&self) -> f64 {
        self.exact_q1 - self.leading_q1
    }

    pub fn remainder2(&self) -> f64 {
        self.exact_q2 - self.leading_q2
    }
}

pub fn matern_fd_means(q: &Matern, m: usize, n: usize) -> Result<MaternMeans> {
    let nu = q.nu();
    if m as f64 <= nu {
        return Err(invalid(format!("order {m} must exceed nu = {nu}")));
    }
    if n <= 2 * m {
        return Err(crate::Error::LatticeTooSmall { n, min: 2 * m + 1 });
    }
    let model = LatticeModel::new(CovModel::Matern(*q), Domain::Fixed { n });
    let exact_q1 = filtered_cov([0, 0], m, 1, &model)?;
    let exact_q2 = filtered_cov([0, 0], m, 2, &model)?;
    let kappa_nu = q.tangent_power_law().phi1();
    let lead = kappa_nu * a_m(nu, m)? * (n as f64).powf(-2.0 * nu);
    Ok(MaternMeans {
        exact_q1,
        exact_q2,
        leading_q1: lead,
        leading_q2: lead * 4f64.powf(nu),
        kappa_nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_converges_quadratically() {
        let q = Matern::new(1.0, 0.5, 1.0).unwrap();
        let d16 = (matern_fd_means(&q, 1, 16).unwrap().ratio() - 2.0).abs();
        let d32 = (matern_fd_means(&q, 1, 32).unwrap().ratio() - 2.0).abs();
        let f = d16 / d32;
        assert!(f > 3.0 && f < 5.0, "{f}");
    }

    #[test]
    fn remainder_slope() {
        let q = Matern::new(1.0, 0.5, 1.0).unwrap();
        let r: Vec<f64> = [12usize, 24, 48]
            .iter()
            .map(|&n| matern_fd_means(&q, 1, n).unwrap().remainder1().abs())
            .collect();
        let target = -2.0 * 0.5 - 2.0;
        for w in r.windows(2) {
            let slope = (w[1] / w[0]).log2();
            assert!((slope - target).abs() < 0.15 * target.abs(), "{slope}");
        }
    }
}
