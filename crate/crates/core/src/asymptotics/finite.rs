use crate::error::{invalid, Result};
use crate::fieldsim::LagTable;
use crate::filter::{Stencil, TrimMode};
use crate::gcmodel::LatticeModel;

use super::{CovPrediction, PredictionKind};

/// Largest lattice side handled by the lag-sum engine.
pub const FINITE_SIDE_CAP: usize = 128;

/// Which filtered field a quadratic form squares.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    /// `Y = D_[1] X`.
    One,
    /// `Z = H Y = D_[2] X`.
    Two,
}

/// `(1/side²) Σ_{t ∈ window} V_t²` for `V` at the given level over the square
/// window with corner `(offset, offset)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadForm {
    pub level: Level,
    pub offset: usize,
    pub side: usize,
}

impl QuadForm {
    pub fn new(level: Level, offset: usize, side: usize) -> Self {
        Self { level, offset, side }
    }

    pub fn count(&self) -> f64 {
        (self.side * self.side) as f64
    }
}

/// Gaussian covariances of quadratic forms in the filtered field via
/// `Cov(Q_a, Q_b) = 2/(|W_a||W_b|) Σ_d N(d) c_ab(d)²`, with `N(d)` the number of
/// site pairs at lag `d` and `c_ab` the cross-covariance of the two levels.
#[derive(Clone, Debug)]
pub struct FiniteLatticeEngine {
    m: usize,
    table: LagTable,
    w: Vec<([i64; 2], f64)>,
}

fn overlap(oa: i64, la: i64, ob: i64, lb: i64, d: i64) -> i64 {
    // #{s ∈ [oa, oa+la), t ∈ [ob, ob+lb) : t − s = d}
    let lo = oa.max(ob - d);
    let hi = (oa + la).min(ob + lb - d);
    (hi - lo).max(0)
}

impl FiniteLatticeEngine {
    /// Engine valid for lags up to `max_lag` in each coordinate.
    pub fn new(model: &LatticeModel, m: usize, max_lag: usize) -> Result<Self> {
        let st = Stencil::new(m)?;
        let b = st.block_weights_1d();
        let mut w = Vec::new();
        for (i, bi) in b.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                w.push(([i as i64, j as i64], bi * bj));
            }
        }
        let table = LagTable::new(model, m, max_lag + 2 * m + 1)?;
        Ok(Self { m, table, w })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// `r(d) = Cov(Y_s, Y_{s+d})`.
    pub fn r(&self, d: [i64; 2]) -> f64 {
        self.table.get(d[0], d[1])
    }

    /// `Cov(U_s, V_{s+d})` for levels `U`, `V`.
    pub fn cross(&self, a: Level, b: Level, d: [i64; 2]) -> f64 {
        match (a, b) {
            (Level::One, Level::One) => self.r(d),
            (Level::One, Level::Two) => {
                self.w.iter().map(|&(k, wk)| wk * self.r([d[0] + k[0], d[1] + k[1]])).sum()
            }
            (Level::Two, Level::One) => {
                self.w.iter().map(|&(k, wk)| wk * self.r([d[0] - k[0], d[1] - k[1]])).sum()
            }
            (Level::Two, Level::Two) => {
                let mut s = 0.0;
                for &(a, wa) in &self.w {
                    for &(b, wb) in &self.w {
                        s += wa * wb * self.r([d[0] + b[0] - a[0], d[1] + b[1] - a[1]]);
                    }
                }
                s
            }
        }
    }

    /// `E Q` for a form.
    pub fn mean(&self, q: &QuadForm) -> f64 {
        self.cross(q.level, q.level, [0, 0])
    }

    /// Exact `Cov(Q_a, Q_b)` for Gaussian fields.
    pub fn cov(&self, a: &QuadForm, b: &QuadForm) -> f64 {
        let (oa, la, ob, lb) = (a.offset as i64, a.side as i64, b.offset as i64, b.side as i64);
        let mut s = 0.0;
        for d1 in (ob - oa - la + 1)..(ob + lb - oa) {
            let c1 = overlap(oa, la, ob, lb, d1);
            if c1 == 0 {
                continue;
            }
            let mut row = 0.0;
            for d2 in (ob - oa - la + 1)..(ob + lb - oa) {
                let c2 = overlap(oa, la, ob, lb, d2);
                if c2 == 0 {
                    continue;
                }
                let c = self.cross(a.level, b.level, [d1, d2]);
                row += c2 as f64 * c * c;
            }
            s += c1 as f64 * row;
        }
        2.0 * s / (a.count() * b.count())
    }
}

fn forms(n: usize, m: usize, trim: TrimMode) -> (QuadForm, QuadForm) {
    let s1 = match trim {
        TrimMode::PerStep => n - m,
        TrimMode::Common => n - 2 * m,
    };
    (QuadForm::new(Level::One, 0, s1), QuadForm::new(Level::Two, 0, n - 2 * m))
}

/// Exact covariance of `(Q₁, Q₂)` on the `n x n` lattice, scaled by
/// `M_int = (n − 2m)²`.
pub fn finite_cov_qq(n: usize, m: usize, model: &LatticeModel, trim: TrimMode) -> Result<CovPrediction> {
    if n > FINITE_SIDE_CAP {
        return Err(invalid(format!("lattice side {n} exceeds the cap {FINITE_SIDE_CAP}")));
    }
    if n <= 2 * m {
        return Err(crate::Error::LatticeTooSmall { n, min: 2 * m + 1 });
    }
    let eng = FiniteLatticeEngine::new(model, m, n)?;
    let (f1, f2) = forms(n, m, trim);
    let c11 = eng.cov(&f1, &f1);
    let c12 = eng.cov(&f1, &f2);
    let c22 = eng.cov(&f2, &f2);
    let scale = ((n - 2 * m) * (n - 2 * m)) as f64;
    Ok(CovPrediction {
        sigma_qq: [[scale * c11, scale * c12], [scale * c12, scale * c22]],
        scale,
        q1: eng.mean(&f1),
        q2: eng.mean(&f2),
        m,
        kind: PredictionKind::FiniteLattice { n, trim },
    })
}

/// Exact `Var(n (Q₁ − Q₁°))`: the per-step first variation against its
/// common-interior version, scaled by `N = n²`.
pub fn trimming_variance(n: usize, m: usize, model: &LatticeModel) -> Result<f64> {
    let eng = FiniteLatticeEngine::new(model, m, n)?;
    let (a, _) = forms(n, m, TrimMode::PerStep);
    let (b, _) = forms(n, m, TrimMode::Common);
    let v = eng.cov(&a, &a) + eng.cov(&b, &b) - 2.0 * eng.cov(&a, &b);
    Ok((n * n) as f64 * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcmodel::{CovModel, PowerLaw};

    #[test]
    fn overlap_counts() {
        assert_eq!(overlap(0, 5, 0, 5, 0), 5);
        assert_eq!(overlap(0, 5, 0, 5, 4), 1);
        assert_eq!(overlap(0, 5, 0, 5, 5), 0);
        assert_eq!(overlap(0, 5, 0, 3, -2), 3);
        assert_eq!(overlap(0, 3, 0, 5, 2), 3);
    }

    #[test]
    fn ratio_identity_and_positivity() {
        for (phi2, m) in [(0.3, 1), (0.5, 1), (0.8, 1), (1.2, 2), (1.5, 2), (1.8, 2)] {
            let model = LatticeModel::unit(CovModel::PowerLaw(PowerLaw::new(1.0, phi2).unwrap()));
            let p = finite_cov_qq(16, m, &model, TrimMode::Common).unwrap();
            assert!(((p.q2 / p.q1) / 4f64.powf(phi2) - 1.0).abs() < 1e-10);
            assert!(p.sigma_qq[0][0] > 0.0);
            let c = p.corr_qq();
            assert!(c > 0.0 && c < 1.0);
        }
    }
}
