use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

use super::Stencil;

/// Index sets for the two quadratic variations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TrimMode {
    /// `Q_j` over its own valid interior, of side `n − jm`.
    #[default]
    PerStep,
    /// Both over the step-two interior, of side `n − 2m`.
    Common,
}

/// Applies the order-`m` difference at step `j`; the output has side `n − jm`
/// and entry `t` equal to `Σ_a c_a X_{t + j a}`.
pub fn apply_filter(x: &Grid, m: usize, j: usize) -> Result<Grid> {
    let st = Stencil::new(m)?;
    let n = x.side();
    if j == 0 || n <= j * m {
        return Err(Error::LatticeTooSmall { n, min: j * m + 1 });
    }
    let out = n - j * m;
    let pts = st.points();
    Ok(Grid::from_fn(out, |t1, t2| {
        pts.iter()
            .map(|&(a, c)| c * x.get(t1 + j * a[0] as usize, t2 + j * a[1] as usize))
            .sum()
    }))
}

/// `(H z)_t = Σ_α C(m,α₁) C(m,α₂) z_{t+α}`; output side is `side − m`.
pub fn block_sum(z: &Grid, m: usize) -> Result<Grid> {
    let st = Stencil::new(m)?;
    let n = z.side();
    if n <= m {
        return Err(Error::LatticeTooSmall { n, min: m + 1 });
    }
    let w = st.block_weights_1d();
    Ok(Grid::from_fn(n - m, |t1, t2| {
        let mut s = 0.0;
        for (a1, w1) in w.iter().enumerate() {
            for (a2, w2) in w.iter().enumerate() {
                s += w1 * w2 * z.get(t1 + a1, t2 + a2);
            }
        }
        s
    }))
}

/// Sum of squares over the `side x side` corner block, in row-major order.
pub fn sum_squares(z: &Grid, side: usize) -> f64 {
    let mut s = 0.0;
    for t1 in 0..side {
        for t2 in 0..side {
            let v = z.get(t1, t2);
            s += v * v;
        }
    }
    s
}

/// Two-scale quadratic variations.
///
/// `q1` and `q2` hold the sums of squares of the stored values divided by the
/// interior counts; `amplitude2` is a common factor carried separately so that
/// rescaled samples share their ratio bit for bit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QvStats {
    q1: f64,
    q2: f64,
    m1: usize,
    m2: usize,
    m: usize,
    trim: TrimMode,
    amplitude2: f64,
}

impl QvStats {
    /// Builds stats from explicit values (unit amplitude).
    pub fn new(q1: f64, q2: f64, m1: usize, m2: usize, m: usize, trim: TrimMode) -> Result<Self> {
        if !(q1 >= 0.0 && q2 >= 0.0 && q1.is_finite() && q2.is_finite()) {
            return Err(invalid("quadratic variations must be finite and nonnegative"));
        }
        if m1 < 1 || m2 < 1 {
            return Err(invalid(format!("interior counts must be positive, got {m1}, {m2}")));
        }
        Ok(Self { q1, q2, m1, m2, m, trim, amplitude2: 1.0 })
    }

    /// Same statistics for the field multiplied by `a`.
    pub fn with_amplitude(mut self, a: f64) -> Self {
        self.amplitude2 *= a * a;
        self
    }

    pub fn q1(&self) -> f64 {
        self.q1 * self.amplitude2
    }

    pub fn q2(&self) -> f64 {
        self.q2 * self.amplitude2
    }

    /// `Q₂/Q₁`, independent of the amplitude factor.
    pub fn ratio(&self) -> f64 {
        self.q2 / self.q1
    }

    pub fn amplitude2(&self) -> f64 {
        self.amplitude2
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn trim(&self) -> TrimMode {
        self.trim
    }

    /// True when either variation vanishes, so no estimate exists.
    pub fn is_degenerate(&self) -> bool {
        self.q1 == 0.0 || self.q2 == 0.0
    }
}

/// Quadratic variations from the step-one filtered field `y` (side `n − m`).
pub fn qv_from_filtered(y: &Grid, m: usize, trim: TrimMode) -> Result<QvStats> {
    let side1 = y.side();
    if side1 <= m {
        return Err(Error::LatticeTooSmall { n: side1 + m, min: 2 * m + 1 });
    }
    let z = block_sum(y, m)?;
    let side2 = z.side();
    let s1 = match trim {
        TrimMode::PerStep => side1,
        TrimMode::Common => side2,
    };
    let (m1, m2) = (s1 * s1, side2 * side2);
    let q1 = sum_squares(y, s1) / m1 as f64;
    let q2 = sum_squares(&z, side2) / m2 as f64;
    QvStats::new(q1, q2, m1, m2, m, trim)
}

/// Quadratic variations of a field on `Λ_n`.
pub fn quadratic_variations(x: &Grid, m: usize, trim: TrimMode) -> Result<QvStats> {
    if x.side() <= 2 * m {
        return Err(Error::LatticeTooSmall { n: x.side(), min: 2 * m + 1 });
    }
    qv_from_filtered(&apply_filter(x, m, 1)?, m, trim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normals, replicate_rng, Purpose};

    fn int_grid(n: usize, seed: u64) -> Grid {
        let z = normals(&mut replicate_rng(seed, Purpose::Misc, 0), n * n);
        Grid::new(n, z.iter().map(|v| (v * 100.0).round()).collect()).unwrap()
    }

    #[test]
    fn annihilation() {
        let c = Grid::from_fn(9, |_, _| 3.25);
        assert!(apply_filter(&c, 1, 1).unwrap().data().iter().all(|&v| v == 0.0));
        let lin = Grid::from_fn(9, |a, b| (a + b) as f64);
        assert!(apply_filter(&lin, 2, 1).unwrap().data().iter().all(|&v| v == 0.0));
        let prod = Grid::from_fn(9, |a, b| (a * b) as f64);
        assert!(apply_filter(&prod, 1, 1).unwrap().data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn step_two_is_block_sum_of_step_one() {
        for m in [1, 2] {
            let x = int_grid(10, 5 + m as u64);
            let d2 = apply_filter(&x, m, 2).unwrap();
            let hd1 = block_sum(&apply_filter(&x, m, 1).unwrap(), m).unwrap();
            assert_eq!(d2, hd1);
        }
        let c = Grid::from_fn(6, |_, _| 2.0);
        assert!(block_sum(&c, 1).unwrap().data().iter().all(|&v| v == 8.0));
    }

    #[test]
    fn impulse_and_zero_fields() {
        let mut x = Grid::zeros(8);
        x.set(4, 4, 1.0);
        let q = quadratic_variations(&x, 1, TrimMode::PerStep).unwrap();
        assert_eq!(q.m1(), 49);
        // four stencil placements each contribute c² = 1
        let y = apply_filter(&x, 1, 1).unwrap();
        assert_eq!(sum_squares(&y, 7), 4.0);
        assert!((q.q1() - 4.0 / 49.0).abs() < 1e-15);
        let z = quadratic_variations(&Grid::zeros(8), 1, TrimMode::PerStep).unwrap();
        assert!(z.is_degenerate());
    }

    #[test]
    fn homogeneous_of_degree_two() {
        let x = int_grid(12, 3);
        let a = quadratic_variations(&x, 1, TrimMode::PerStep).unwrap();
        let b = quadratic_variations(&x.scaled(2.0), 1, TrimMode::PerStep).unwrap();
        assert_eq!(b.q1(), 4.0 * a.q1());
        assert_eq!(b.q2(), 4.0 * a.q2());
        let c = a.with_amplitude(0.37);
        assert_eq!(c.ratio(), a.ratio());
    }

    #[test]
    fn interior_counts() {
        let x = int_grid(12, 9);
        let p = quadratic_variations(&x, 2, TrimMode::PerStep).unwrap();
        assert_eq!((p.m1(), p.m2()), (100, 64));
        let c = quadratic_variations(&x, 2, TrimMode::Common).unwrap();
        assert_eq!((c.m1(), c.m2()), (64, 64));
        assert!(quadratic_variations(&Grid::zeros(4), 2, TrimMode::PerStep).is_err());
    }
}
