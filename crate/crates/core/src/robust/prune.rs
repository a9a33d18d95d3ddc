use crate::error::{invalid, Error, Result};
use crate::filter::{apply_filter, block_sum, QvStats, TrimMode};
use crate::grid::Grid;

use super::SiteMask;

/// Quadratic variations over the filter rows that touch no deleted site,
/// each divided by its own surviving count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrunedQv {
    pub tilde_q1: f64,
    pub tilde_q2: f64,
    pub tilde_m1: usize,
    pub tilde_m2: usize,
    pub m: usize,
}

impl PrunedQv {
    pub fn stats(&self) -> Result<QvStats> {
        QvStats::new(self.tilde_q1, self.tilde_q2, self.tilde_m1, self.tilde_m2, self.m, TrimMode::PerStep)
    }
}

/// True when the step-`j` order-`m` row at `t` has a deleted site in its support.
pub fn row_touches(mask: &SiteMask, t: (usize, usize), m: usize, j: usize) -> bool {
    (0..=m).any(|a| (0..=m).any(|b| mask.is_deleted(t.0 + j * a, t.1 + j * b)))
}

fn pruned_sum(v: &Grid, mask: &SiteMask, m: usize, j: usize) -> (f64, usize) {
    let side = v.side();
    let mut s = 0.0;
    let mut count = 0;
    for t1 in 0..side {
        for t2 in 0..side {
            if row_touches(mask, (t1, t2), m, j) {
                continue;
            }
            let x = v.get(t1, t2);
            s += x * x;
            count += 1;
        }
    }
    (s, count)
}

/// Pruned two-scale variations on the per-step interiors.
pub fn prune_and_qv(x: &Grid, mask: &SiteMask, m: usize) -> Result<PrunedQv> {
    if mask.n() != x.side() {
        return Err(invalid(format!("mask side {} does not match field side {}", mask.n(), x.side())));
    }
    let y = apply_filter(x, m, 1)?;
    let z = block_sum(&y, m)?;
    let (s1, c1) = pruned_sum(&y, mask, m, 1);
    let (s2, c2) = pruned_sum(&z, mask, m, 2);
    if c1 == 0 || c2 == 0 {
        return Err(Error::Numeric("every filter row touches a deleted site".into()));
    }
    Ok(PrunedQv { tilde_q1: s1 / c1 as f64, tilde_q2: s2 / c2 as f64, tilde_m1: c1, tilde_m2: c2, m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::quadratic_variations;
    use crate::rng::{normals, replicate_rng, Purpose};

    fn field(n: usize) -> Grid {
        Grid::new(n, normals(&mut replicate_rng(9, Purpose::Misc, 0), n * n)).unwrap()
    }

    #[test]
    fn empty_mask_is_bitwise_plain() {
        let x = field(12);
        for m in [1, 2] {
            let p = prune_and_qv(&x, &SiteMask::empty(12), m).unwrap();
            let q = quadratic_variations(&x, m, TrimMode::PerStep).unwrap();
            assert_eq!(p.tilde_q1, q.q1());
            assert_eq!(p.tilde_q2, q.q2());
            assert_eq!((p.tilde_m1, p.tilde_m2), (q.m1(), q.m2()));
        }
    }

    #[test]
    fn footprint_counts() {
        let x = field(10);
        let interior = prune_and_qv(&x, &SiteMask::single(10, 4, 5).unwrap(), 1).unwrap();
        assert_eq!(81 - interior.tilde_m1, 4);
        let corner = prune_and_qv(&x, &SiteMask::single(10, 0, 0).unwrap(), 1).unwrap();
        assert!(81 - corner.tilde_m1 < 4);
    }

    #[test]
    fn adding_deletions_never_adds_rows() {
        let x = field(14);
        let mut mask = SiteMask::empty(14);
        let mut prev = prune_and_qv(&x, &mask, 2).unwrap();
        for r in 0..6 {
            mask = mask.union(&SiteMask::random_uniform(14, 2, 21, r).unwrap());
            let cur = prune_and_qv(&x, &mask, 2).unwrap();
            assert!(cur.tilde_m1 <= prev.tilde_m1 && cur.tilde_m2 <= prev.tilde_m2);
            prev = cur;
        }
    }
}
