use faer::Mat;

use crate::error::{invalid, Error, Result};
use crate::fieldsim::LagTable;
use crate::gcmodel::{CovModel, LatticeModel, PowerLaw};
use crate::grid::Grid;
use crate::linalg::{trace_product, Cholesky};

use super::optimize::{brent_min, grid_nodes, refine_tabulated, Minimum, REFINE_TOL};
use super::whittle::{likelihood_window, EDGE_DELTA};

/// Largest interior size `M` accepted by REML.
pub const REML_SITE_CAP: usize = 2500;
/// Central-difference step for `∂S₀/∂φ₂`.
pub const FISHER_STEP: f64 = 1e-4;
/// Coarse and fine scan steps for the batched path.
pub const COARSE_STEP: f64 = 0.05;
pub const FINE_STEP: f64 = 0.01;

/// Profiled REML estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemlEstimate {
    pub phi2_hat: f64,
    pub phi1_hat: f64,
    pub objective: f64,
    pub log_det: f64,
    pub fisher_sd_phi2: Option<f64>,
    pub at_boundary: bool,
}

/// Expected information for `φ₂` with `P = S₀⁻¹ ∂S₀/∂φ₂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FisherInfo {
    /// `½ tr P²`, with `φ₁` treated as known.
    pub known_scale: f64,
    /// `½ [tr P² − (tr P)²/M]`, with `φ₁` profiled out.
    pub profiled: f64,
}

impl FisherInfo {
    pub fn sd_known_scale(&self) -> f64 {
        self.known_scale.powf(-0.5)
    }

    pub fn sd_profiled(&self) -> f64 {
        self.profiled.powf(-0.5)
    }
}

/// Covariance of the unit-scale filtered field on an `l x l` window.
pub fn s0_matrix(phi2: f64, m: usize, l: usize) -> Result<Mat<f64>> {
    let model = LatticeModel::unit(CovModel::PowerLaw(PowerLaw::new(1.0, phi2)?));
    let table = LagTable::new(&model, m, l)?;
    let k = l * l;
    Ok(Mat::from_fn(k, k, |a, b| {
        table.get((b / l) as i64 - (a / l) as i64, (b % l) as i64 - (a % l) as i64)
    }))
}

/// REML problem for windows of side `l = n − 2m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RemlProblem {
    l: usize,
    m: usize,
}

impl RemlProblem {
    pub fn new(l: usize, m: usize) -> Result<Self> {
        if l * l > REML_SITE_CAP {
            return Err(invalid(format!("REML interior {} exceeds the cap {REML_SITE_CAP}", l * l)));
        }
        if l < 2 {
            return Err(Error::LatticeTooSmall { n: l + 2 * m, min: 2 * m + 2 });
        }
        Ok(Self { l, m })
    }

    pub fn sites(&self) -> usize {
        self.l * self.l
    }

    fn bounds(&self) -> (f64, f64) {
        (EDGE_DELTA, self.m as f64 - EDGE_DELTA)
    }

    /// Objectives `½{log|S₀| + M log(yᵀS₀⁻¹y/M)}` and quadratic forms for
    /// every column of `ys` at one `φ₂`.
    pub fn objectives(&self, phi2: f64, ys: &Mat<f64>) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let chol = Cholesky::factor(&s0_matrix(phi2, self.m, self.l)?)?;
        let mut w = ys.clone();
        chol.solve_lower_in_place(&mut w);
        let mm = self.sites() as f64;
        let ld = chol.log_det();
        let qf: Vec<f64> = (0..w.ncols()).map(|c| (0..w.nrows()).map(|r| w[(r, c)] * w[(r, c)]).sum()).collect();
        let obj = qf.iter().map(|q| 0.5 * (ld + mm * (q / mm).ln())).collect();
        Ok((obj, qf, ld))
    }

    fn column(&self, y: &Grid) -> Result<Mat<f64>> {
        if y.side() != self.l {
            return Err(invalid(format!("window side {} does not match {}", y.side(), self.l)));
        }
        Ok(Mat::from_fn(self.sites(), 1, |r, _| y.data()[r]))
    }

    fn finish(&self, phi2: f64, y: &Mat<f64>, at_boundary: bool) -> Result<RemlEstimate> {
        let (obj, qf, ld) = self.objectives(phi2, y)?;
        Ok(RemlEstimate {
            phi2_hat: phi2,
            phi1_hat: qf[0] / self.sites() as f64,
            objective: obj[0],
            log_det: ld,
            fisher_sd_phi2: None,
            at_boundary,
        })
    }

    /// Exact-objective estimate: coarse scan then Brent on the best bracket.
    pub fn estimate(&self, y: &Grid) -> Result<RemlEstimate> {
        let col = self.column(y)?;
        let (lo, hi) = self.bounds();
        let f = |p: f64| self.objectives(p, &col).map(|o| o.0[0]).unwrap_or(f64::INFINITY);
        let nodes = grid_nodes(lo, hi, COARSE_STEP);
        let values: Vec<f64> = nodes.iter().map(|&p| f(p)).collect();
        let best = (0..nodes.len()).fold(0, |b, k| if values[k] < values[b] { k } else { b });
        if !values[best].is_finite() {
            return Err(Error::Numeric("REML objective is not finite".into()));
        }
        let last = nodes.len() - 1;
        let at_boundary = best == 0 || best == last;
        let (x, fx) = brent_min(&f, nodes[best.saturating_sub(1)], nodes[(best + 1).min(last)], REFINE_TOL)?;
        let p = if values[best] < fx { nodes[best] } else { x };
        self.finish(p, &col, at_boundary)
    }

    /// Batched estimates: every scan node is factored once and shared by all
    /// replicates; each replicate's minimum is refined on a cubic interpolant
    /// of its fine-grid objective.
    pub fn estimate_batch(&self, ys: &[Grid]) -> Result<Vec<RemlEstimate>> {
        if ys.is_empty() {
            return Ok(Vec::new());
        }
        let k = self.sites();
        let mut mat = Mat::zeros(k, ys.len());
        for (c, y) in ys.iter().enumerate() {
            if y.side() != self.l {
                return Err(invalid("window side mismatch in REML batch"));
            }
            for r in 0..k {
                mat[(r, c)] = y.data()[r];
            }
        }
        let (lo, hi) = self.bounds();
        let coarse = grid_nodes(lo, hi, COARSE_STEP);
        let coarse_vals: Vec<Vec<f64>> = coarse.iter().map(|&p| self.objectives(p, &mat).map(|o| o.0)).collect::<Result<_>>()?;
        let last = coarse.len() - 1;
        let best: Vec<usize> = (0..ys.len())
            .map(|r| (0..coarse.len()).fold(0, |b, i| if coarse_vals[i][r] < coarse_vals[b][r] { i } else { b }))
            .collect();
        // Fine nodes cover every replicate's coarse bracket.
        let fine_all = grid_nodes(lo, hi, FINE_STEP);
        let brackets: Vec<(f64, f64)> = best
            .iter()
            .map(|&b| (coarse[b.saturating_sub(1)], coarse[(b + 1).min(last)]))
            .collect();
        let fine: Vec<f64> = fine_all
            .iter()
            .copied()
            .filter(|&p| brackets.iter().any(|&(a, b)| p >= a - 1e-12 && p <= b + 1e-12))
            .collect();
        let fine_vals: Vec<Vec<f64>> = fine.iter().map(|&p| self.objectives(p, &mat).map(|o| o.0)).collect::<Result<_>>()?;
        let mut chosen = Vec::with_capacity(ys.len());
        for r in 0..ys.len() {
            let (a, b) = brackets[r];
            let idx: Vec<usize> = (0..fine.len()).filter(|&i| fine[i] >= a - 1e-12 && fine[i] <= b + 1e-12).collect();
            let nodes: Vec<f64> = idx.iter().map(|&i| fine[i]).collect();
            let vals: Vec<f64> = idx.iter().map(|&i| fine_vals[i][r]).collect();
            let Minimum { x, .. } = refine_tabulated(&nodes, &vals, REFINE_TOL)?;
            chosen.push((x, best[r] == 0 || best[r] == last));
        }
        chosen
            .iter()
            .enumerate()
            .map(|(r, &(p, edge))| {
                let col = Mat::from_fn(k, 1, |i, _| mat[(i, r)]);
                self.finish(p, &col, edge)
            })
            .collect()
    }

    /// Expected information for `φ₂` at `phi2`.
    pub fn fisher(&self, phi2: f64) -> Result<FisherInfo> {
        let s = s0_matrix(phi2, self.m, self.l)?;
        let sp = s0_matrix(phi2 + FISHER_STEP, self.m, self.l)?;
        let sm = s0_matrix(phi2 - FISHER_STEP, self.m, self.l)?;
        let mut p = Mat::from_fn(s.nrows(), s.ncols(), |i, j| (sp[(i, j)] - sm[(i, j)]) / (2.0 * FISHER_STEP));
        Cholesky::factor(&s)?.solve_in_place(&mut p);
        let tr2 = trace_product(&p, &p);
        let tr: f64 = (0..p.nrows()).map(|i| p[(i, i)]).sum();
        let mm = self.sites() as f64;
        Ok(FisherInfo { known_scale: 0.5 * tr2, profiled: 0.5 * (tr2 - tr * tr / mm) })
    }
}

/// REML estimate of `φ₂` from a field on `Λ_n`, with the profiled Fisher SD
/// evaluated at the estimate.
pub fn reml_estimate(x: &Grid, m: usize) -> Result<RemlEstimate> {
    let y = likelihood_window(x, m)?;
    let prob = RemlProblem::new(y.side(), m)?;
    let mut est = prob.estimate(&y)?;
    est.fisher_sd_phi2 = Some(prob.fisher(est.phi2_hat)?.sd_profiled());
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldsim::{FilteredSampler, ModelSpec};

    fn window(seed: u64, r: u64) -> Grid {
        let spec = ModelSpec::power_law(1.0, 0.6).unwrap();
        FilteredSampler::new(14, 1, &spec).unwrap().sample(seed, r).values().window(0, 0, 12)
    }

    #[test]
    fn scale_equivariance() {
        let p = RemlProblem::new(12, 1).unwrap();
        let y = window(3, 0);
        let a = p.estimate(&y).unwrap();
        let b = p.estimate(&y.scaled(3.0)).unwrap();
        assert!((a.phi2_hat - b.phi2_hat).abs() < 1e-9);
        assert!((b.phi1_hat / a.phi1_hat - 9.0).abs() < 1e-6);
    }

    #[test]
    fn batch_agrees_with_exact_path() {
        let p = RemlProblem::new(12, 1).unwrap();
        let ys: Vec<Grid> = (0..4).map(|r| window(5, r)).collect();
        let batch = p.estimate_batch(&ys).unwrap();
        for (y, b) in ys.iter().zip(&batch) {
            let e = p.estimate(y).unwrap();
            assert!((e.phi2_hat - b.phi2_hat).abs() < 1e-4, "{} {}", e.phi2_hat, b.phi2_hat);
        }
    }

    #[test]
    fn profiled_information_is_smaller() {
        let f = RemlProblem::new(8, 1).unwrap().fisher(0.4).unwrap();
        assert!(f.profiled > 0.0 && f.profiled < f.known_scale);
    }
}
