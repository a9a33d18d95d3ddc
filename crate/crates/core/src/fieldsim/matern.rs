use crate::error::{invalid, Error, Result};
use crate::gcmodel::Matern;
use crate::linalg::Cholesky;

use super::sampler::factor_or_diagnose;
use super::{draw, sym_matrix};

/// Largest number of locations simulated jointly.
pub const MATERN_SITE_CAP: usize = 4096;

/// Exact sampler of a Matérn field at fixed locations.
#[derive(Clone, Debug)]
pub struct MaternSampler {
    chol: Cholesky,
}

pub(crate) fn check_locations(locs: &[[f64; 2]]) -> Result<()> {
    if locs.is_empty() || locs.len() > MATERN_SITE_CAP {
        return Err(invalid(format!("need 1..={MATERN_SITE_CAP} locations, got {}", locs.len())));
    }
    if locs.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(invalid("non-finite location"));
    }
    let mut sorted: Vec<[f64; 2]> = locs.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Numeric("duplicate locations make the covariance singular".into()));
    }
    Ok(())
}

pub(crate) fn matern_matrix(locs: &[[f64; 2]], q: &Matern) -> crate::linalg::Matrix<f64> {
    sym_matrix(locs.len(), |i, j| {
        q.cov_r((locs[i][0] - locs[j][0]).hypot(locs[i][1] - locs[j][1]))
    })
}

impl MaternSampler {
    pub fn new(locations: &[[f64; 2]], q: &Matern) -> Result<Self> {
        check_locations(locations)?;
        Ok(Self { chol: factor_or_diagnose(&matern_matrix(locations, q))? })
    }

    /// Lattice locations `t/n` for `t ∈ Λ_n`, row-major.
    pub fn grid_locations(n: usize) -> Vec<[f64; 2]> {
        let h = 1.0 / n as f64;
        (0..n * n).map(|i| [(i / n) as f64 * h, (i % n) as f64 * h]).collect()
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> Vec<f64> {
        draw(&self.chol, seed, replicate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_variance() {
        let q = Matern::new(2.0, 0.5, 1.0).unwrap();
        let s = MaternSampler::new(&[[0.3, 0.3]], &q).unwrap();
        let r = 10_000;
        let v: f64 = (0..r).map(|i| s.sample(5, i)[0].powi(2)).sum::<f64>() / r as f64;
        assert!((v / 2.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn distant_sites_uncorrelated() {
        let q = Matern::new(1.0, 0.5, 1.0).unwrap();
        let s = MaternSampler::new(&[[0.0, 0.0], [50.0, 0.0]], &q).unwrap();
        let r = 10_000;
        let c: f64 = (0..r).map(|i| {
            let v = s.sample(6, i);
            v[0] * v[1]
        }).sum::<f64>() / r as f64;
        assert!(c.abs() < 0.03);
        assert!(q.cov_r(50.0) < 0.01);
    }

    #[test]
    fn duplicates_rejected() {
        let q = Matern::new(1.0, 0.5, 1.0).unwrap();
        assert!(MaternSampler::new(&[[0.1, 0.2], [0.1, 0.2]], &q).is_err());
    }
}
