use faer::Mat;

use crate::error::{invalid, Result};

use super::Stencil;

/// Largest lattice side for which filter matrices are materialized.
pub const MATRIX_SIDE_CAP: usize = 64;

/// Sparse row storage: each row lists `(column, value)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRows {
    pub ncols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(c, v)| v * x[c]).sum()).collect()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut d = Mat::zeros(self.nrows(), self.ncols);
        for (i, r) in self.rows.iter().enumerate() {
            for &(c, v) in r {
                d[(i, c)] += v;
            }
        }
        d
    }

    /// `self · other` as sparse rows.
    pub fn compose(&self, other: &SparseRows) -> SparseRows {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut acc = std::collections::BTreeMap::new();
                for &(k, a) in r {
                    for &(c, b) in &other.rows[k] {
                        *acc.entry(c).or_insert(0.0) += a * b;
                    }
                }
                acc.into_iter().filter(|&(_, v)| v != 0.0).collect()
            })
            .collect();
        SparseRows { ncols: other.ncols, rows }
    }

    /// `FᵀF / scale` as a dense matrix.
    pub fn gram(&self, scale: f64) -> Mat<f64> {
        let mut a = Mat::zeros(self.ncols, self.ncols);
        for r in &self.rows {
            for &(i, u) in r {
                for &(j, v) in r {
                    a[(i, j)] += u * v / scale;
                }
            }
        }
        a
    }
}

/// Matrix of the step-`j` order-`m` difference from `Λ_n` onto `Λ_{n−jm}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterMatrix {
    pub n: usize,
    pub m: usize,
    pub j: usize,
    pub f: SparseRows,
}

fn check_cap(n: usize) -> Result<()> {
    if n > MATRIX_SIDE_CAP {
        return Err(invalid(format!("filter matrices are capped at side {MATRIX_SIDE_CAP}, got {n}")));
    }
    Ok(())
}

impl FilterMatrix {
    pub fn new(n: usize, m: usize, j: usize) -> Result<Self> {
        check_cap(n)?;
        let st = Stencil::new(m)?;
        if n <= j * m {
            return Err(crate::Error::LatticeTooSmall { n, min: j * m + 1 });
        }
        let out = n - j * m;
        let pts = st.points();
        let mut rows = Vec::with_capacity(out * out);
        for t1 in 0..out {
            for t2 in 0..out {
                rows.push(
                    pts.iter()
                        .map(|&(a, c)| ((t1 + j * a[0] as usize) * n + t2 + j * a[1] as usize, c))
                        .collect(),
                );
            }
        }
        Ok(Self { n, m, j, f: SparseRows { ncols: n * n, rows } })
    }

    /// Number of rows, `M_j = (n − jm)²`.
    pub fn m_j(&self) -> usize {
        self.f.nrows()
    }

    /// `xᵀ A x` with `A = FᵀF / M_j`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.f.apply(x).iter().map(|v| v * v).sum::<f64>() / self.m_j() as f64
    }

    /// Dense `A = FᵀF / M_j`.
    pub fn a_matrix(&self) -> Mat<f64> {
        self.f.gram(self.m_j() as f64)
    }

    /// Block-sum matrix `H` from `Λ_{side}` onto `Λ_{side−m}`.
    pub fn block_sum_matrix(side: usize, m: usize) -> Result<SparseRows> {
        let w = Stencil::new(m)?.block_weights_1d();
        if side <= m {
            return Err(crate::Error::LatticeTooSmall { n: side, min: m + 1 });
        }
        let out = side - m;
        let mut rows = Vec::with_capacity(out * out);
        for t1 in 0..out {
            for t2 in 0..out {
                let mut r = Vec::with_capacity((m + 1) * (m + 1));
                for (a1, w1) in w.iter().enumerate() {
                    for (a2, w2) in w.iter().enumerate() {
                        r.push(((t1 + a1) * side + t2 + a2, w1 * w2));
                    }
                }
                rows.push(r);
            }
        }
        Ok(SparseRows { ncols: side * side, rows })
    }
}

/// `B_{α,β} = (α/M₁) I + (β/M₂) HᵀH` on the step-one filtered space of side `n − m`.
pub fn assemble_b(alpha: f64, beta: f64, n: usize, m: usize) -> Result<Mat<f64>> {
    check_cap(n)?;
    if n <= 2 * m {
        return Err(crate::Error::LatticeTooSmall { n, min: 2 * m + 1 });
    }
    let h = FilterMatrix::block_sum_matrix(n - m, m)?;
    let m1 = ((n - m) * (n - m)) as f64;
    let m2 = h.nrows() as f64;
    let g = h.gram(1.0);
    let b = Mat::from_fn(h.ncols, h.ncols, |i, j| {
        beta / m2 * g[(i, j)] + if i == j { alpha / m1 } else { 0.0 }
    });
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{quadratic_variations, TrimMode};
    use crate::grid::Grid;
    use crate::rng::{normals, replicate_rng, Purpose};

    #[test]
    fn structure() {
        let f = FilterMatrix::new(8, 1, 1).unwrap();
        assert_eq!(f.m_j(), 49);
        let f6 = FilterMatrix::new(7, 1, 1).unwrap();
        assert_eq!(f6.m_j(), 36);
        for r in &f6.f.rows {
            assert_eq!(r.len(), 4);
            assert!(r.iter().all(|&(_, v)| v.abs() == 1.0));
            assert_eq!(r.iter().map(|p| p.1).sum::<f64>(), 0.0);
        }
        let fro: f64 = f6.f.rows.iter().flatten().map(|p| p.1 * p.1).sum();
        assert_eq!(fro, 4.0 * 36.0);
        assert!(FilterMatrix::new(65, 1, 1).is_err());
    }

    #[test]
    fn step_two_factorizes() {
        for m in [1, 2] {
            let n = 10;
            let f1 = FilterMatrix::new(n, m, 1).unwrap();
            let f2 = FilterMatrix::new(n, m, 2).unwrap();
            let h = FilterMatrix::block_sum_matrix(n - m, m).unwrap();
            let prod = h.compose(&f1.f).to_dense();
            let d2 = f2.f.to_dense();
            assert_eq!(prod.nrows(), d2.nrows());
            for i in 0..d2.nrows() {
                for j in 0..d2.ncols() {
                    assert_eq!(prod[(i, j)], d2[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn quadratic_form_matches_direct() {
        let n = 12;
        let z = normals(&mut replicate_rng(1, Purpose::Misc, 0), n * n);
        let x = Grid::new(n, z.clone()).unwrap();
        let qv = quadratic_variations(&x, 2, TrimMode::PerStep).unwrap();
        let f1 = FilterMatrix::new(n, 2, 1).unwrap();
        let f2 = FilterMatrix::new(n, 2, 2).unwrap();
        assert!(((f1.quadratic_form(&z) - qv.q1()) / qv.q1()).abs() < 1e-12);
        assert!(((f2.quadratic_form(&z) - qv.q2()) / qv.q2()).abs() < 1e-12);
        let a = f1.a_matrix();
        let mut xa = 0.0;
        for i in 0..n * n {
            for j in 0..n * n {
                xa += z[i] * a[(i, j)] * z[j];
            }
        }
        assert!(((xa - qv.q1()) / qv.q1()).abs() < 1e-12);
    }

    #[test]
    fn b_matrix_quadratic_form() {
        let (n, m) = (9, 1);
        let b = assemble_b(0.3, 0.7, n, m).unwrap();
        let y = normals(&mut replicate_rng(2, Purpose::Misc, 0), (n - m) * (n - m));
        let yg = Grid::new(n - m, y.clone()).unwrap();
        let qv = crate::filter::qv_from_filtered(&yg, m, TrimMode::PerStep).unwrap();
        let mut v = 0.0;
        for i in 0..y.len() {
            for j in 0..y.len() {
                v += y[i] * b[(i, j)] * y[j];
            }
        }
        let want = 0.3 * qv.q1() + 0.7 * qv.q2();
        assert!(((v - want) / want).abs() < 1e-12);
    }
}
