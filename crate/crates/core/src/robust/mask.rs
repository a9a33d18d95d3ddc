use rand::seq::index::sample;

use crate::error::{invalid, Result};
use crate::rng::{replicate_rng, uniform_open, Purpose};

/// How a mask was generated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaskOrigin {
    Deterministic,
    Bernoulli { retention: f64, seed: u64, replicate: u64 },
}

/// Set of deleted sites on `Λ_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteMask {
    n: usize,
    deleted: Vec<bool>,
    origin: MaskOrigin,
}

impl SiteMask {
    pub fn empty(n: usize) -> Self {
        Self { n, deleted: vec![false; n * n], origin: MaskOrigin::Deterministic }
    }

    /// Mask deleting the listed sites.
    pub fn from_sites(n: usize, sites: &[(usize, usize)]) -> Result<Self> {
        let mut m = Self::empty(n);
        for &(i, j) in sites {
            if i >= n || j >= n {
                return Err(invalid(format!("site ({i}, {j}) outside Λ_{n}")));
            }
            m.deleted[i * n + j] = true;
        }
        Ok(m)
    }

    pub fn single(n: usize, i: usize, j: usize) -> Result<Self> {
        Self::from_sites(n, &[(i, j)])
    }

    /// `len` consecutive sites of row `row` starting at column `start`.
    pub fn row_segment(n: usize, row: usize, start: usize, len: usize) -> Result<Self> {
        let sites: Vec<_> = (start..start + len).map(|j| (row, j)).collect();
        Self::from_sites(n, &sites)
    }

    /// Sites with `|i − j| < width`.
    pub fn diagonal(n: usize, width: usize) -> Result<Self> {
        let sites: Vec<_> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| i.abs_diff(j) < width).map(move |j| (i, j)))
            .collect();
        Self::from_sites(n, &sites)
    }

    /// `k` distinct sites drawn uniformly.
    pub fn random_uniform(n: usize, k: usize, seed: u64, replicate: u64) -> Result<Self> {
        if k > n * n {
            return Err(invalid(format!("cannot delete {k} of {} sites", n * n)));
        }
        let mut rng = replicate_rng(seed, Purpose::Thinning, replicate);
        let mut m = Self::empty(n);
        for i in sample(&mut rng, n * n, k) {
            m.deleted[i] = true;
        }
        Ok(m)
    }

    /// Each site kept independently with probability `retention`.
    pub fn bernoulli(n: usize, retention: f64, seed: u64, replicate: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&retention) {
            return Err(invalid(format!("retention must be in [0, 1], got {retention}")));
        }
        let mut rng = replicate_rng(seed, Purpose::Thinning, replicate);
        let deleted = (0..n * n).map(|_| uniform_open(&mut rng) >= retention).collect();
        Ok(Self { n, deleted, origin: MaskOrigin::Bernoulli { retention, seed, replicate } })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn origin(&self) -> MaskOrigin {
        self.origin
    }

    /// Number of deleted sites `k_n`.
    pub fn k(&self) -> usize {
        self.deleted.iter().filter(|&&d| d).count()
    }

    pub fn is_deleted(&self, i: usize, j: usize) -> bool {
        self.deleted[i * self.n + j]
    }

    /// Adds the deletions of `other`.
    pub fn union(&self, other: &SiteMask) -> Self {
        let deleted = self.deleted.iter().zip(&other.deleted).map(|(a, b)| *a || *b).collect();
        Self { n: self.n, deleted, origin: MaskOrigin::Deterministic }
    }
}

/// Retention `p_n = 1 − N^{−a}` for `N = n²` sites.
pub fn retention_schedule(n: usize, a: f64) -> f64 {
    1.0 - ((n * n) as f64).powf(-a)
}
