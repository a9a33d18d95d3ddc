use crate::error::{invalid, Result};
use crate::special::binomial;

/// Order-`m` tensor-product difference with coefficients
/// `c_a = (−1)^{a₁+a₂} C(m,a₁) C(m,a₂)` on `{0..m}²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    m: usize,
    c1: Vec<f64>,
}

/// Largest supported stencil order.
pub const MAX_ORDER: usize = 4;

impl Stencil {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 || m > MAX_ORDER {
            return Err(invalid(format!("stencil order must be in 1..={MAX_ORDER}, got {m}")));
        }
        let c1 = (0..=m)
            .map(|a| if a % 2 == 0 { binomial(m, a) } else { -binomial(m, a) })
            .collect();
        Ok(Self { m, c1 })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// One-dimensional factor `(−1)^a C(m, a)`.
    pub fn coeffs_1d(&self) -> &[f64] {
        &self.c1
    }

    pub fn coeff(&self, a1: usize, a2: usize) -> f64 {
        self.c1[a1] * self.c1[a2]
    }

    /// Nonzero coefficients with their offsets.
    pub fn points(&self) -> Vec<([i64; 2], f64)> {
        let mut out = Vec::with_capacity((self.m + 1) * (self.m + 1));
        for a1 in 0..=self.m {
            for a2 in 0..=self.m {
                out.push(([a1 as i64, a2 as i64], self.coeff(a1, a2)));
            }
        }
        out
    }

    /// One-dimensional autocorrelation `Σ_a c_a c_{a+d}` for `d ∈ −m..=m`.
    pub fn autocorrelation_1d(&self) -> Vec<f64> {
        let m = self.m as i64;
        (-m..=m)
            .map(|d| {
                (0..=m)
                    .filter_map(|a| {
                        let b = a + d;
                        (0..=m).contains(&b).then(|| self.c1[a as usize] * self.c1[b as usize])
                    })
                    .sum()
            })
            .collect()
    }

    /// Autocorrelation weights `w_d = Σ_a c_a c_{a+d}` over `d ∈ [−m, m]²`, so that
    /// `Σ_{a,b} c_a c_b K(u + b − a) = Σ_d w_d K(u + d)`.
    pub fn autocorrelation(&self) -> Vec<([i64; 2], f64)> {
        let w = self.autocorrelation_1d();
        let m = self.m as i64;
        let mut out = Vec::with_capacity(w.len() * w.len());
        for (i, &wi) in w.iter().enumerate() {
            for (j, &wj) in w.iter().enumerate() {
                out.push(([i as i64 - m, j as i64 - m], wi * wj));
            }
        }
        out
    }

    /// Block-sum weights `C(m, α)` of the step-two factorization.
    pub fn block_weights_1d(&self) -> Vec<f64> {
        (0..=self.m).map(|a| binomial(self.m, a)).collect()
    }

    /// `Σ c²`.
    pub fn sum_sq(&self) -> f64 {
        let s: f64 = self.c1.iter().map(|c| c * c).sum();
        s * s
    }

    /// `Σ |c|`, equal to `4^m`.
    pub fn sum_abs(&self) -> f64 {
        let s: f64 = self.c1.iter().map(|c| c.abs()).sum();
        s * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_and_moments() {
        for m in 1..=MAX_ORDER {
            let s = Stencil::new(m).unwrap();
            let pts = s.points();
            assert_eq!(pts.iter().map(|p| p.1).sum::<f64>(), 0.0);
            assert_eq!(s.sum_abs(), 4f64.powi(m as i32));
            for p in 0..m as i32 {
                for q in 0..(m as i32 - p) {
                    let mom: f64 =
                        pts.iter().map(|(a, c)| c * (a[0] as f64).powi(p) * (a[1] as f64).powi(q)).sum();
                    assert_eq!(mom, 0.0, "m={m} p={p} q={q}");
                }
            }
        }
    }

    #[test]
    fn autocorrelation_matches_pair_sum() {
        let s = Stencil::new(2).unwrap();
        let pts = s.points();
        for (d, w) in s.autocorrelation() {
            let direct: f64 = pts
                .iter()
                .flat_map(|(a, ca)| pts.iter().map(move |(b, cb)| (a, ca, b, cb)))
                .filter(|(a, _, b, _)| b[0] - a[0] == d[0] && b[1] - a[1] == d[1])
                .map(|(_, ca, _, cb)| ca * cb)
                .sum();
            assert_eq!(direct, w);
        }
        assert_eq!(s.autocorrelation_1d(), vec![1.0, -4.0, 6.0, -4.0, 1.0]);
    }

    #[test]
    fn rejects_order_zero() {
        assert!(Stencil::new(0).is_err());
    }
}
