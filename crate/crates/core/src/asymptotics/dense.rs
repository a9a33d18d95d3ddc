use faer::Mat;

use crate::error::{invalid, Result};
use crate::fieldsim::LagTable;
use crate::filter::{FilterMatrix, SparseRows, TrimMode};
use crate::gcmodel::LatticeModel;
use crate::linalg::trace_product;

use super::{CovPrediction, PredictionKind};

/// Largest side accepted by the dense oracle.
pub const DENSE_SIDE_CAP: usize = 16;

fn window_rows(side: usize, w: usize) -> SparseRows {
    let rows = (0..w * w).map(|k| vec![((k / w) * side + k % w, 1.0)]).collect();
    SparseRows { ncols: side * side, rows }
}

/// Covariance of `(Q₁, Q₂)` from dense matrices, `Cov(Q_a, Q_b) = 2 tr(A_a Σ A_b Σ)`
/// with `Σ` the covariance of the step-one filtered field. Same scaling as
/// [`super::finite_cov_qq`].
pub fn dense_cov_qq(n: usize, m: usize, model: &LatticeModel, trim: TrimMode) -> Result<CovPrediction> {
    if n > DENSE_SIDE_CAP {
        return Err(invalid(format!("dense oracle is limited to n <= {DENSE_SIDE_CAP}")));
    }
    if n <= 2 * m {
        return Err(crate::Error::LatticeTooSmall { n, min: 2 * m + 1 });
    }
    let s1 = n - m;
    let s2 = n - 2 * m;
    let table = LagTable::new(model, m, s1)?;
    let k = s1 * s1;
    let sigma = Mat::from_fn(k, k, |a, b| {
        let d1 = (b / s1) as i64 - (a / s1) as i64;
        let d2 = (b % s1) as i64 - (a % s1) as i64;
        table.get(d1, d2)
    });
    let w1 = match trim {
        TrimMode::PerStep => s1,
        TrimMode::Common => s2,
    };
    let f1 = window_rows(s1, w1);
    let f2 = FilterMatrix::block_sum_matrix(s1, m)?;
    let a1 = f1.gram((w1 * w1) as f64);
    let a2 = f2.gram((s2 * s2) as f64);
    let p1 = &a1 * &sigma;
    let p2 = &a2 * &sigma;
    let c11 = 2.0 * trace_product(&p1, &p1);
    let c12 = 2.0 * trace_product(&p1, &p2);
    let c22 = 2.0 * trace_product(&p2, &p2);
    let tr = |p: &Mat<f64>| (0..k).map(|i| p[(i, i)]).sum::<f64>();
    let scale = (s2 * s2) as f64;
    Ok(CovPrediction {
        sigma_qq: [[scale * c11, scale * c12], [scale * c12, scale * c22]],
        scale,
        q1: tr(&p1),
        q2: tr(&p2),
        m,
        kind: PredictionKind::FiniteLattice { n, trim },
    })
}
