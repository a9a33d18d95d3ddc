use crate::error::Result;
use crate::filter::Stencil;
use crate::gcmodel::LatticeModel;

/// `Cov(D_[j] X_t, D_[j] X_{t+u}) = Σ_d w_d K(j(u + d))` with `w` the stencil
/// autocorrelation.
pub fn filtered_cov(u: [i64; 2], m: usize, j: usize, model: &LatticeModel) -> Result<f64> {
    model.check_order(m)?;
    let w = Stencil::new(m)?.autocorrelation();
    Ok(filtered_cov_with(&w, u, j, model))
}

pub(crate) fn filtered_cov_with(w: &[([i64; 2], f64)], u: [i64; 2], j: usize, model: &LatticeModel) -> f64 {
    let jf = j as f64;
    w.iter()
        .map(|&(d, wd)| {
            let a = (u[0] + d[0]) as f64;
            let b = (u[1] + d[1]) as f64;
            wd * model.kernel_r(jf * a.hypot(b))
        })
        .sum()
}

/// Table of step-one filtered covariances `r(u)` for `|u₁|, |u₂| < extent`,
/// using the symmetry `r(u₁,u₂) = r(|u₁|,|u₂|)`.
#[derive(Clone, Debug)]
pub struct LagTable {
    extent: usize,
    values: Vec<f64>,
}

impl LagTable {
    pub fn new(model: &LatticeModel, m: usize, extent: usize) -> Result<Self> {
        model.check_order(m)?;
        let w = Stencil::new(m)?.autocorrelation();
        let mut values = vec![0.0; extent * extent];
        for a in 0..extent {
            for b in 0..=a {
                let v = filtered_cov_with(&w, [a as i64, b as i64], 1, model);
                values[a * extent + b] = v;
                values[b * extent + a] = v;
            }
        }
        Ok(Self { extent, values })
    }

    pub fn extent(&self) -> usize {
        self.extent
    }

    #[inline]
    pub fn get(&self, u1: i64, u2: i64) -> f64 {
        self.values[u1.unsigned_abs() as usize * self.extent + u2.unsigned_abs() as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcmodel::{a_m, CovModel, PowerLaw};
    use approx::assert_relative_eq;

    fn pl(phi1: f64, phi2: f64) -> LatticeModel {
        LatticeModel::unit(CovModel::PowerLaw(PowerLaw::new(phi1, phi2).unwrap()))
    }

    #[test]
    fn variance_identities() {
        let model = pl(1.0, 0.5);
        let v1 = filtered_cov([0, 0], 1, 1, &model).unwrap();
        assert_relative_eq!(v1, 8.306_235_417_440_249, max_relative = 1e-13);
        for (phi2, m) in [(0.3, 1), (0.8, 1), (1.2, 2), (1.8, 2), (0.6, 2)] {
            let model = pl(1.7, phi2);
            let q1 = filtered_cov([0, 0], m, 1, &model).unwrap();
            let q2 = filtered_cov([0, 0], m, 2, &model).unwrap();
            assert_relative_eq!(q1, 1.7 * a_m(phi2, m).unwrap(), max_relative = 1e-12);
            assert_relative_eq!(q2 / q1, 4f64.powf(phi2), max_relative = 1e-12);
        }
    }

    #[test]
    fn symmetric_and_square_summable() {
        let model = pl(1.0, 0.5);
        for u in [[1, 2], [3, -1], [0, 5]] {
            let a = filtered_cov(u, 1, 1, &model).unwrap();
            let b = filtered_cov([-u[0], -u[1]], 1, 1, &model).unwrap();
            assert!((a - b).abs() < 1e-13 * a.abs());
        }
        let t = LagTable::new(&model, 1, 41).unwrap();
        let partial = |k: i64| -> f64 {
            let mut s = 0.0;
            for a in -k..=k {
                for b in -k..=k {
                    s += t.get(a, b).powi(2);
                }
            }
            s
        };
        let (s20, s40) = (partial(20), partial(40));
        assert!((s40 - s20) / s40 < 1e-3);
    }

    #[test]
    fn order_is_checked() {
        assert!(filtered_cov([0, 0], 1, 1, &pl(1.0, 1.5)).is_err());
    }
}
