use faer::Mat;

use crate::error::Result;
use crate::filter::{FilterMatrix, SparseRows};
use crate::linalg::sym_eigenvalues;

use super::prune::row_touches;
use super::SiteMask;

/// Measured perturbation `Δ = Ã_j − A_j` from deleting filter rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeletionReport {
    pub j: usize,
    pub k: usize,
    pub sites: usize,
    pub removed_rows: usize,
    pub fro: f64,
    pub spectral: f64,
    /// Rank of the removed-row Gram matrix, i.e. of `Δ` at a common divisor.
    pub rank: usize,
}

fn split_rows(f: &FilterMatrix, mask: &SiteMask) -> (SparseRows, SparseRows) {
    let side = f.n - f.j * f.m;
    let (mut keep, mut drop) = (Vec::new(), Vec::new());
    for (idx, row) in f.f.rows.iter().enumerate() {
        if row_touches(mask, (idx / side, idx % side), f.m, f.j) {
            drop.push(row.clone());
        } else {
            keep.push(row.clone());
        }
    }
    let ncols = f.f.ncols;
    (SparseRows { ncols, rows: keep }, SparseRows { ncols, rows: drop })
}

fn gram_apply(f: &SparseRows, v: &[f64]) -> Vec<f64> {
    let fv = f.apply(v);
    let mut out = vec![0.0; f.ncols];
    for (row, x) in f.rows.iter().zip(fv) {
        for &(c, w) in row {
            out[c] += w * x;
        }
    }
    out
}

fn spectral_norm(apply: impl Fn(&[f64]) -> Vec<f64>, dim: usize) -> f64 {
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        // Iterate with Δ² so that eigenvalues of either sign converge alike.
        let w = apply(&apply(&v));
        let next = w.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt();
        v = w;
        if (next - lambda).abs() <= 1e-12 * next {
            return next;
        }
        lambda = next;
    }
    lambda
}

fn numerical_rank(drop: &SparseRows) -> Result<usize> {
    let r = drop.nrows();
    if r == 0 {
        return Ok(0);
    }
    let d = drop.to_dense();
    let g = Mat::from_fn(r, r, |a, b| (0..d.ncols()).map(|c| d[(a, c)] * d[(b, c)]).sum());
    let ev = sym_eigenvalues(&g)?;
    let top = ev.last().copied().unwrap_or(0.0);
    Ok(ev.iter().filter(|&&e| e > 1e-10 * top).count())
}

/// Norms and rank of `Ã_j − A_j` for `j = 1, 2` with own divisors.
pub fn verify_deletion_bounds(n: usize, m: usize, mask: &SiteMask) -> Result<Vec<DeletionReport>> {
    let mut out = Vec::with_capacity(2);
    for j in [1, 2] {
        let f = FilterMatrix::new(n, m, j)?;
        let (keep, drop) = split_rows(&f, mask);
        let mj = f.f.nrows() as f64;
        let mt = keep.nrows() as f64;
        let c = if keep.nrows() == 0 { 0.0 } else { 1.0 / mt - 1.0 / mj };
        let dense = {
            let mut a = keep.gram(1.0);
            let b = drop.gram(1.0);
            for col in 0..a.ncols() {
                for row in 0..a.nrows() {
                    a[(row, col)] = c * a[(row, col)] - b[(row, col)] / mj;
                }
            }
            a
        };
        let fro = (0..dense.ncols())
            .map(|col| (0..dense.nrows()).map(|row| dense[(row, col)].powi(2)).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        let apply = |v: &[f64]| {
            let a = gram_apply(&keep, v);
            let b = gram_apply(&drop, v);
            a.iter().zip(b).map(|(x, y)| c * x - y / mj).collect::<Vec<f64>>()
        };
        out.push(DeletionReport {
            j,
            k: mask.k(),
            sites: n * n,
            removed_rows: drop.nrows(),
            fro,
            spectral: spectral_norm(apply, n * n),
            rank: numerical_rank(&drop)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_mask_has_zero_perturbation() {
        for r in verify_deletion_bounds(8, 1, &SiteMask::empty(8)).unwrap() {
            assert_eq!((r.fro, r.spectral, r.rank), (0.0, 0.0, 0));
        }
    }

    #[test]
    fn rank_bound_and_growth() {
        let n = 16;
        let mean = |k: usize| {
            (0..6)
                .map(|r| verify_deletion_bounds(n, 1, &SiteMask::random_uniform(n, k, 3, r).unwrap()).unwrap()[0])
                .map(|rep| {
                    assert!(rep.rank <= 4 * rep.k * 4);
                    assert!(rep.spectral <= rep.fro * (1.0 + 1e-9));
                    rep.fro
                })
                .sum::<f64>()
        };
        let g = mean(8) / mean(4);
        assert!((1.3..=2.8).contains(&g), "{g}");
    }
}
