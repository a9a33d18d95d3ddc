//! Deterministic derivative-free 1-D minimization.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::brent::BrentOpt;

use crate::error::{Error, Result};

/// Default scan resolution and refinement tolerance.
pub const SCAN_STEP: f64 = 0.01;
pub const REFINE_TOL: f64 = 1e-6;

/// Location of a 1-D minimum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub fx: f64,
    /// The scan minimum sat on an end node, so the true minimum may lie outside.
    pub at_boundary: bool,
}

struct Objective<'a, F>(&'a F);

impl<F: Fn(f64) -> f64> CostFunction for Objective<'_, F> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, x: &f64) -> std::result::Result<f64, argmin::core::Error> {
        Ok((self.0)(*x))
    }
}

/// Brent minimization on `[lo, hi]` to absolute tolerance `tol`.
pub fn brent_min<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)> {
    let solver = BrentOpt::new(lo, hi).set_tolerance(f64::EPSILON.sqrt() * 1e-3, tol / 3.0);
    let res = Executor::new(Objective(f), solver)
        .configure(|s| s.max_iters(200))
        .run()
        .map_err(|e| Error::NoConvergence(format!("Brent: {e}")))?;
    let st = res.state();
    let x = st.get_best_param().copied().ok_or_else(|| Error::NoConvergence("Brent: no iterate".into()))?;
    let fx = st.get_best_cost();
    if !fx.is_finite() {
        return Err(Error::Numeric(format!("objective is not finite at {x}")));
    }
    Ok((x, fx))
}

/// Equispaced nodes `lo, lo + step, …` not exceeding `hi`.
pub fn grid_nodes(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=k).map(|i| lo + step * i as f64).collect()
}

fn argmin_finite(values: &[f64]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if v.is_finite() && best.map_or(true, |b| *v < values[b]) {
            best = Some(i);
        }
    }
    best.ok_or_else(|| Error::Numeric("objective is not finite at any scan node".into()))
}

/// Scans `f` on a grid of `step` and refines the best bracket with Brent.
pub fn scan_then_refine<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, step: f64, tol: f64) -> Result<Minimum> {
    let nodes = grid_nodes(lo, hi, step);
    let values: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
    let i = argmin_finite(&values)?;
    let at_boundary = i == 0 || i + 1 == nodes.len();
    let a = nodes[i.saturating_sub(1)];
    let b = nodes[(i + 1).min(nodes.len() - 1)];
    if a == b {
        return Ok(Minimum { x: nodes[i], fx: values[i], at_boundary });
    }
    let (x, fx) = brent_min(f, a, b, tol)?;
    if values[i] < fx {
        return Ok(Minimum { x: nodes[i], fx: values[i], at_boundary });
    }
    Ok(Minimum { x, fx, at_boundary })
}

/// Piecewise-cubic Lagrange interpolant through tabulated `(nodes, values)`.
pub fn cubic_interp(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    if n < 4 {
        let k = nodes.partition_point(|&v| v <= x).clamp(1, n - 1);
        let t = (x - nodes[k - 1]) / (nodes[k] - nodes[k - 1]);
        return values[k - 1] + t * (values[k] - values[k - 1]);
    }
    let k = nodes.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    let s = k.saturating_sub(1).min(n - 4);
    let mut acc = 0.0;
    for i in s..s + 4 {
        let mut w = values[i];
        for j in s..s + 4 {
            if j != i {
                w *= (x - nodes[j]) / (nodes[i] - nodes[j]);
            }
        }
        acc += w;
    }
    acc
}

/// Minimum of tabulated values refined on the cubic interpolant.
pub fn refine_tabulated(nodes: &[f64], values: &[f64], tol: f64) -> Result<Minimum> {
    let i = argmin_finite(values)?;
    let at_boundary = i == 0 || i + 1 == nodes.len();
    if nodes.len() < 3 {
        return Ok(Minimum { x: nodes[i], fx: values[i], at_boundary });
    }
    let a = nodes[i.saturating_sub(1)];
    let b = nodes[(i + 1).min(nodes.len() - 1)];
    let f = |x: f64| cubic_interp(nodes, values, x);
    let (x, fx) = brent_min(&f, a, b, tol)?;
    if values[i] < fx {
        return Ok(Minimum { x: nodes[i], fx: values[i], at_boundary });
    }
    Ok(Minimum { x, fx, at_boundary })
}
