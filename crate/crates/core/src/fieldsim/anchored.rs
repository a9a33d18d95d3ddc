use crate::error::{invalid, Result};
use crate::gcmodel::{CovModel, PowerLaw};
use crate::grid::Grid;

use super::sampler::factor_or_diagnose;
use super::{draw, sym_matrix, FieldSample, ModelSpec, SampleKind};
use crate::linalg::Cholesky;

/// Largest lattice side for anchored simulation.
pub const ANCHORED_SIDE_CAP: usize = 64;

/// Sites at which an intrinsic field is pinned to zero, with the Lagrange
/// basis reproducing polynomials of the field's order.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchorSet {
    points: Vec<[f64; 2]>,
    h: f64,
}

impl AnchorSet {
    /// `(0,0)` for order 0; `(0,0), (h,0), (0,h)` for order 1.
    pub fn for_order(k: usize, h: f64) -> Result<Self> {
        let points = match k {
            0 => vec![[0.0, 0.0]],
            1 => vec![[0.0, 0.0], [h, 0.0], [0.0, h]],
            _ => return Err(invalid(format!("anchored fields support orders 0 and 1, got {k}"))),
        };
        Ok(Self { points, h })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// Lagrange basis values `p_l(s)`.
    pub fn basis(&self, s: [f64; 2]) -> Vec<f64> {
        if self.points.len() == 1 {
            vec![1.0]
        } else {
            let (p1, p2) = (s[0] / self.h, s[1] / self.h);
            vec![1.0 - p1 - p2, p1, p2]
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Covariance of the anchored version
/// `X(s) − Σ_l p_l(s) X(b_l)` of an intrinsic power-law field.
pub fn anchored_cov(s: [f64; 2], t: [f64; 2], pl: &PowerLaw, anchors: &AnchorSet) -> f64 {
    let b = anchors.points();
    let (ps, pt) = (anchors.basis(s), anchors.basis(t));
    let k = |a: [f64; 2], c: [f64; 2]| pl.gc_r(dist(a, c));
    let mut v = k(s, t);
    for (l, &bl) in b.iter().enumerate() {
        v -= ps[l] * k(t, bl) + pt[l] * k(s, bl);
        for (l2, &bl2) in b.iter().enumerate() {
            v += ps[l] * pt[l2] * k(bl, bl2);
        }
    }
    v
}

/// Exact sampler of an anchored power-law field on `Λ_n`.
#[derive(Clone, Debug)]
pub struct AnchoredSampler {
    n: usize,
    free: Vec<usize>,
    amplitude: f64,
    chol: Cholesky,
}

impl AnchoredSampler {
    pub fn new(n: usize, spec: &ModelSpec) -> Result<Self> {
        let (model, amplitude) = spec.simulation_kernel();
        let pl = match model.model {
            CovModel::PowerLaw(p) if model.spacing == 1.0 => p,
            _ => return Err(invalid("anchored simulation needs a power-law model")),
        };
        if n > ANCHORED_SIDE_CAP || n < 3 {
            return Err(invalid(format!("anchored side must be in 3..={ANCHORED_SIDE_CAP}, got {n}")));
        }
        let anchors = AnchorSet::for_order(pl.order_k(), 1.0)?;
        let is_anchor = |i: usize| {
            let s = [(i / n) as f64, (i % n) as f64];
            anchors.points().iter().any(|&b| b == s)
        };
        let free: Vec<usize> = (0..n * n).filter(|&i| !is_anchor(i)).collect();
        let site = |i: usize| [(free[i] / n) as f64, (free[i] % n) as f64];
        let cov = sym_matrix(free.len(), |i, j| anchored_cov(site(i), site(j), &pl, &anchors));
        Ok(Self { n, free, amplitude, chol: factor_or_diagnose(&cov)? })
    }

    pub fn jitter(&self) -> f64 {
        self.chol.jitter()
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> FieldSample {
        let y = draw(&self.chol, seed, replicate);
        let mut g = Grid::zeros(self.n);
        for (&i, v) in self.free.iter().zip(y) {
            g.data_mut()[i] = v;
        }
        FieldSample::new(g, self.amplitude, SampleKind::Field, seed, replicate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::TrimMode;
    use crate::gcmodel::a_m;

    #[test]
    fn anchor_is_zero_and_variance_at_unit_lag() {
        let pl = PowerLaw::new(1.0, 0.5).unwrap();
        let a = AnchorSet::for_order(0, 1.0).unwrap();
        let v = anchored_cov([1.0, 0.0], [1.0, 0.0], &pl, &a);
        assert!((v - 7.089_815_403_622_064).abs() < 1e-12);
        let spec = ModelSpec::power_law(1.0, 0.5).unwrap();
        let s = AnchoredSampler::new(10, &spec).unwrap();
        assert_eq!(s.sample(3, 0).raw().get(0, 0), 0.0);
    }

    #[test]
    fn second_order_anchors_reproduce_affine_functions() {
        let a = AnchorSet::for_order(1, 0.25).unwrap();
        let s = [0.7, -0.3];
        let p = a.basis(s);
        let f = |x: [f64; 2]| 2.0 + 3.0 * x[0] - 1.5 * x[1];
        let interp: f64 = a.points().iter().zip(&p).map(|(&b, &w)| w * f(b)).sum();
        assert!((interp - f(s)).abs() < 1e-14);
    }

    #[test]
    fn filtered_moment_matches_scale_function() {
        for (phi2, m, n) in [(0.5, 1, 12), (1.5, 2, 12)] {
            let spec = ModelSpec::power_law(1.0, phi2).unwrap();
            let s = AnchoredSampler::new(n, &spec).unwrap();
            let r = 400;
            let q: Vec<f64> = (0..r).map(|i| s.sample(77, i).qv(m, TrimMode::PerStep).unwrap().q1()).collect();
            let mean = q.iter().sum::<f64>() / r as f64;
            let sd = (q.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1) as f64).sqrt();
            let want = a_m(phi2, m).unwrap();
            assert!((mean - want).abs() < 3.0 * sd / (r as f64).sqrt(), "phi2={phi2}: {mean} vs {want}");
        }
    }
}
