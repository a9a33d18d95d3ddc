//! Dense symmetric linear algebra on top of faer, run single-threaded so
//! results do not depend on the machine.

use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_upper_triangular_in_place,
};
use faer::{Mat, Par, Side};

use crate::error::{Error, Result};

pub use faer::Mat as Matrix;

/// Relative diagonal loadings tried in turn when a factorization fails.
pub const JITTER_LADDER: [f64; 3] = [0.0, 1e-12, 1e-10];

/// Lower Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: Mat<f64>,
    jitter: f64,
}

impl Cholesky {
    /// Factors `a`, retrying with diagonal loading `eps * trace / dim` along
    /// [`JITTER_LADDER`].
    pub fn factor(a: &Mat<f64>) -> Result<Self> {
        let n = a.nrows();
        let scale = (0..n).map(|i| a[(i, i)]).sum::<f64>() / n.max(1) as f64;
        let mut last_pivot = 0;
        for &eps in &JITTER_LADDER {
            let jitter = eps * scale;
            let attempt = if jitter == 0.0 {
                a.llt(Side::Lower)
            } else {
                let mut b = a.clone();
                for i in 0..n {
                    b[(i, i)] += jitter;
                }
                b.llt(Side::Lower)
            };
            match attempt {
                Ok(llt) => return Ok(Self { l: llt.L().to_owned(), jitter }),
                Err(faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index }) => {
                    last_pivot = index
                }
            }
        }
        Err(Error::NotPositiveDefinite { pivot: last_pivot })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Diagonal loading that was needed (0 when none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn l(&self) -> &Mat<f64> {
        &self.l
    }

    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|i| self.l[(i, i)].ln()).sum::<f64>() * 2.0
    }

    /// `L z` accumulated column by column in a fixed order.
    pub fn lower_mul(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(z.len(), n);
        let mut y = vec![0.0; n];
        for (k, &zk) in z.iter().enumerate() {
            let col = &self.l.col_as_slice(k)[k..];
            for (yi, li) in y[k..].iter_mut().zip(col) {
                *yi += zk * li;
            }
        }
        y
    }

    /// Overwrites `b` with `L^{-1} b`.
    pub fn solve_lower_in_place(&self, b: &mut Mat<f64>) {
        solve_lower_triangular_in_place(self.l.as_ref(), b.as_mut(), Par::Seq);
    }

    /// Overwrites `b` with `A^{-1} b`.
    pub fn solve_in_place(&self, b: &mut Mat<f64>) {
        solve_lower_triangular_in_place(self.l.as_ref(), b.as_mut(), Par::Seq);
        solve_upper_triangular_in_place(self.l.transpose(), b.as_mut(), Par::Seq);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut m = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        self.solve_in_place(&mut m);
        m.col_as_slice(0).to_vec()
    }

    pub fn inverse(&self) -> Mat<f64> {
        let mut m = Mat::identity(self.dim(), self.dim());
        self.solve_in_place(&mut m);
        m
    }
}

/// Eigenvalues of a symmetric matrix in nondecreasing order.
pub fn sym_eigenvalues(a: &Mat<f64>) -> Result<Vec<f64>> {
    let mut ev = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigenvalue solver: {e:?}")))?;
    ev.sort_by(|x, y| x.total_cmp(y));
    Ok(ev)
}

/// Trace of `a * b` for square matrices of equal size.
pub fn trace_product(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> Mat<f64> {
        Mat::from_fn(n, n, |i, j| (-(i as f64 - j as f64).abs() / 3.0).exp())
    }

    #[test]
    fn factor_solve_roundtrip() {
        let a = spd(40);
        let c = Cholesky::factor(&a).unwrap();
        assert_eq!(c.jitter(), 0.0);
        let b: Vec<f64> = (0..40).map(|i| (i as f64).cos()).collect();
        let x = c.solve(&b);
        for i in 0..40 {
            let r: f64 = (0..40).map(|j| a[(i, j)] * x[j]).sum();
            assert!((r - b[i]).abs() < 1e-10);
        }
        let z: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y = c.lower_mul(&z);
        let l = c.l();
        for i in 0..40 {
            let r: f64 = (0..=i).map(|j| l[(i, j)] * z[j]).sum();
            assert!((r - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn log_det_matches_eigenvalues() {
        let a = spd(15);
        let c = Cholesky::factor(&a).unwrap();
        let ev = sym_eigenvalues(&a).unwrap();
        let ld: f64 = ev.iter().map(|v| v.ln()).sum();
        assert!((ld - c.log_det()).abs() < 1e-10);
    }

    #[test]
    fn singular_matrix_gets_loaded() {
        let v: Vec<f64> = (0..6).map(|i| i as f64 + 1.0).collect();
        let a = Mat::from_fn(6, 6, |i, j| v[i] * v[j]);
        let res = Cholesky::factor(&a);
        if let Ok(c) = res {
            assert!(c.jitter() > 0.0);
        }
    }

    #[test]
    fn indefinite_matrix_fails() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { -1.0 } else { 0.0 });
        assert!(matches!(Cholesky::factor(&a), Err(Error::NotPositiveDefinite { .. })));
    }
}
