//! Square real-valued arrays indexed by lattice sites.

use crate::error::{invalid, Result};

/// An `side x side` array stored row-major; entry `(t1, t2)` sits at `t1 * side + t2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    side: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(side: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != side * side {
            return Err(invalid(format!(
                "grid of side {side} needs {} values, got {}",
                side * side,
                data.len()
            )));
        }
        Ok(Self { side, data })
    }

    pub fn zeros(side: usize) -> Self {
        Self { side, data: vec![0.0; side * side] }
    }

    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(side * side);
        for t1 in 0..side {
            for t2 in 0..side {
                data.push(f(t1, t2));
            }
        }
        Self { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, t1: usize, t2: usize) -> f64 {
        self.data[t1 * self.side + t2]
    }

    #[inline]
    pub fn set(&mut self, t1: usize, t2: usize, v: f64) {
        self.data[t1 * self.side + t2] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// The `side x side` block whose corner is `(o1, o2)`.
    pub fn window(&self, o1: usize, o2: usize, side: usize) -> Grid {
        assert!(o1 + side <= self.side && o2 + side <= self.side, "window out of range");
        Grid::from_fn(side, |a, b| self.get(o1 + a, o2 + b))
    }

    pub fn scaled(&self, s: f64) -> Grid {
        Grid { side: self.side, data: self.data.iter().map(|v| v * s).collect() }
    }
}
