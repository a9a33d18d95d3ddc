use crate::error::{invalid, Result};
use crate::gcmodel::{Matern, PowerLaw};
use crate::grid::Grid;
use crate::linalg::Cholesky;
use crate::rng::{normals, replicate_rng, uniform_open, Purpose};

use super::anchored::{anchored_cov, AnchorSet};
use super::matern::matern_matrix;
use super::sampler::factor_or_diagnose;
use super::sym_matrix;

/// Truth for jittered sampling on `[0,1]²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JitterModel {
    Matern(Matern),
    /// Power law pinned to zero at its anchor sites, which are observed
    /// without jitter.
    PinnedPowerLaw(PowerLaw),
}

/// Clean and jittered observations driven by the same Gaussian draws.
#[derive(Clone, Debug, PartialEq)]
pub struct JitterPair {
    pub clean: Grid,
    pub jittered: Grid,
    /// Offsets `ε_t` for every site, zero at anchors.
    pub offsets: Vec<[f64; 2]>,
}

fn lattice_locations(n: usize, free: &[usize]) -> Vec<[f64; 2]> {
    let h = 1.0 / n as f64;
    free.iter().map(|&i| [(i / n) as f64 * h, (i % n) as f64 * h]).collect()
}

fn factor(model: &JitterModel, anchors: Option<&AnchorSet>, locs: &[[f64; 2]]) -> Result<Cholesky> {
    let cov = match (model, anchors) {
        (JitterModel::Matern(q), _) => matern_matrix(locs, q),
        (JitterModel::PinnedPowerLaw(p), Some(a)) => {
            sym_matrix(locs.len(), |i, j| anchored_cov(locs[i], locs[j], p, a))
        }
        (JitterModel::PinnedPowerLaw(_), None) => unreachable!("power law always has anchors"),
    };
    factor_or_diagnose(&cov)
}

/// Sampler of fixed-domain fields at `x_t = t/n + ε_t`, `‖ε_t‖∞ ≤ c/n`.
#[derive(Clone, Debug)]
pub struct JitterSampler {
    n: usize,
    c: f64,
    model: JitterModel,
    anchors: Option<AnchorSet>,
    free: Vec<usize>,
    clean: Cholesky,
}

impl JitterSampler {
    pub fn new(n: usize, model: JitterModel, c: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&c) {
            return Err(invalid(format!("jitter bound must lie in [0, 1/2), got {c}")));
        }
        if n < 3 || n * n > super::MATERN_SITE_CAP {
            return Err(invalid(format!("jitter side {n} out of range")));
        }
        let h = 1.0 / n as f64;
        let anchors = match model {
            JitterModel::PinnedPowerLaw(p) => Some(AnchorSet::for_order(p.order_k(), h)?),
            JitterModel::Matern(_) => None,
        };
        let is_anchor = |i: usize| {
            let s = [(i / n) as f64 * h, (i % n) as f64 * h];
            anchors.as_ref().is_some_and(|a| a.points().contains(&s))
        };
        let free: Vec<usize> = (0..n * n).filter(|&i| !is_anchor(i)).collect();
        let locs = lattice_locations(n, &free);
        let clean = factor(&model, anchors.as_ref(), &locs)?;
        Ok(Self { n, c, model, anchors, free, clean })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bound(&self) -> f64 {
        self.c
    }

    fn scatter(&self, v: Vec<f64>) -> Grid {
        let mut g = Grid::zeros(self.n);
        for (&i, x) in self.free.iter().zip(v) {
            g.data_mut()[i] = x;
        }
        g
    }

    /// Clean and jittered samples of replicate `r`.
    pub fn sample_pair(&self, seed: u64, replicate: u64) -> Result<JitterPair> {
        let z = normals(&mut replicate_rng(seed, Purpose::Gaussian, replicate), self.free.len());
        let clean = self.scatter(self.clean.lower_mul(&z));
        let mut offsets = vec![[0.0; 2]; self.n * self.n];
        if self.c == 0.0 {
            return Ok(JitterPair { jittered: clean.clone(), clean, offsets });
        }
        let b = self.c / self.n as f64;
        let mut rng = replicate_rng(seed, Purpose::Jitter, replicate);
        let mut locs = lattice_locations(self.n, &self.free);
        for (loc, &i) in locs.iter_mut().zip(&self.free) {
            let e = [b * (2.0 * uniform_open(&mut rng) - 1.0), b * (2.0 * uniform_open(&mut rng) - 1.0)];
            offsets[i] = e;
            loc[0] += e[0];
            loc[1] += e[1];
        }
        let jittered = self.scatter(factor(&self.model, self.anchors.as_ref(), &locs)?.lower_mul(&z));
        Ok(JitterPair { clean, jittered, offsets })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_jitter_is_clean() {
        let q = Matern::new(1.0, 0.5, 1.0).unwrap();
        let s = JitterSampler::new(8, JitterModel::Matern(q), 0.0).unwrap();
        let p = s.sample_pair(3, 1).unwrap();
        assert_eq!(p.clean, p.jittered);
    }

    #[test]
    fn offsets_bounded_and_anchors_pinned() {
        let p = PowerLaw::new(1.0, 1.5).unwrap();
        let s = JitterSampler::new(10, JitterModel::PinnedPowerLaw(p), 0.4).unwrap();
        let pair = s.sample_pair(4, 0).unwrap();
        for e in &pair.offsets {
            assert!(e[0].abs() <= 0.04 && e[1].abs() <= 0.04);
        }
        for (a, b) in [(0, 0), (1, 0), (0, 1)] {
            assert_eq!(pair.jittered.get(a, b), 0.0);
            assert_eq!(pair.clean.get(a, b), 0.0);
        }
        assert_ne!(pair.clean, pair.jittered);
        assert!(JitterSampler::new(10, JitterModel::PinnedPowerLaw(p), 0.5).is_err());
    }
}
