use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::filter::{apply_filter, symbols::g_abs2};
use crate::gcmodel::{CovModel, LatticeModel, LatticeSpectrum, PowerLaw, TWO_PI};
use crate::grid::Grid;

use super::optimize::{brent_min, grid_nodes, Minimum, REFINE_TOL, SCAN_STEP};

/// Default mask threshold on `|g_m(λ)|`.
pub const DEFAULT_MASK_TAU: f64 = 1e-3;
/// Alias truncation used for the Whittle spectrum.
pub const WHITTLE_K_ALIAS: usize = 10;
/// How the aliased spectrum is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AliasSum {
    /// Sum over `‖k‖_∞ ≤ K` plus the analytic tail correction.
    Corrected(usize),
    /// Plain sum over `‖k‖_∞ ≤ K`.
    Truncated(usize),
}

impl Default for AliasSum {
    fn default() -> Self {
        AliasSum::Corrected(WHITTLE_K_ALIAS)
    }
}

/// Distance kept from the ends of `(0, m)`.
pub const EDGE_DELTA: f64 = 0.01;

/// Profiled Whittle estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WhittleEstimate {
    pub phi2_hat: f64,
    pub phi1_hat: f64,
    pub objective: f64,
    pub mask_size: usize,
    pub at_boundary: bool,
}

/// `|Ŷ(λ)|²/M` on the Fourier grid of a square window, row-major.
pub fn periodogram(y: &Grid) -> Vec<f64> {
    let l = y.side();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(l);
    let mut buf: Vec<Complex<f64>> = y.data().iter().map(|&v| Complex::new(v, 0.0)).collect();
    for row in buf.chunks_mut(l) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); l];
    for j in 0..l {
        for i in 0..l {
            col[i] = buf[i * l + j];
        }
        fft.process(&mut col);
        for i in 0..l {
            buf[i * l + j] = col[i];
        }
    }
    let m = (l * l) as f64;
    buf.iter().map(|c| c.norm_sqr() / m).collect()
}

#[derive(Clone, Copy, Debug)]
struct Bin {
    lambda: [f64; 2],
    g2: f64,
    count: f64,
}

/// Whittle problem on a fixed window size: frequency bins folded by the
/// symmetries of the power-law spectrum, plus cached spectra on the scan grid.
#[derive(Clone, Debug)]
pub struct WhittleBatch {
    side: usize,
    m: usize,
    alias: AliasSum,
    bin_of: Vec<Option<usize>>,
    bins: Vec<Bin>,
    nodes: Vec<f64>,
    /// Per node: `Σ count·log s₀` and `1/s₀` per bin.
    log_sums: Vec<f64>,
    inv_s0: Vec<Vec<f64>>,
}

fn fold(k: usize, l: usize) -> usize {
    k.min(l - k)
}

impl WhittleBatch {
    /// Window side `l = n − 2m`, order `m` and mask threshold `tau`.
    pub fn new(l: usize, m: usize, tau: f64) -> Result<Self> {
        Self::with_alias(l, m, tau, AliasSum::default())
    }

    pub fn with_alias(l: usize, m: usize, tau: f64, alias: AliasSum) -> Result<Self> {
        if l < 2 {
            return Err(Error::LatticeTooSmall { n: l + 2 * m, min: 2 * m + 2 });
        }
        if !(tau >= 0.0) {
            return Err(invalid("mask threshold must be nonnegative"));
        }
        let h = l / 2 + 1;
        let mut bin_id = vec![None; h * h];
        let mut bins: Vec<Bin> = Vec::new();
        let mut bin_of = vec![None; l * l];
        for k1 in 0..l {
            for k2 in 0..l {
                let (a, b) = (fold(k1, l), fold(k2, l));
                let (a, b) = (a.min(b), a.max(b));
                let lambda = [TWO_PI * a as f64 / l as f64, TWO_PI * b as f64 / l as f64];
                let g2 = g_abs2(lambda, m, 1);
                if g2 < tau * tau || g2 == 0.0 {
                    continue;
                }
                let id = *bin_id[a * h + b].get_or_insert_with(|| {
                    bins.push(Bin { lambda, g2, count: 0.0 });
                    bins.len() - 1
                });
                bins[id].count += 1.0;
                bin_of[k1 * l + k2] = Some(id);
            }
        }
        if bins.is_empty() {
            return Err(Error::Numeric("Whittle mask removes every frequency".into()));
        }
        let mut batch = Self { side: l, m, alias, bin_of, bins, nodes: Vec::new(), log_sums: Vec::new(), inv_s0: Vec::new() };
        let nodes = grid_nodes(EDGE_DELTA, m as f64 - EDGE_DELTA, SCAN_STEP);
        for &p in &nodes {
            let s0 = batch.spectrum(p)?;
            batch.log_sums.push(batch.bins.iter().zip(&s0).map(|(b, s)| b.count * s.ln()).sum());
            batch.inv_s0.push(s0.iter().map(|s| 1.0 / s).collect());
        }
        batch.nodes = nodes;
        Ok(batch)
    }

    pub fn mask_size(&self) -> usize {
        self.bins.iter().map(|b| b.count as usize).sum()
    }

    fn spectrum(&self, phi2: f64) -> Result<Vec<f64>> {
        let pl = PowerLaw::new(1.0, phi2)?;
        let model = LatticeModel::unit(CovModel::PowerLaw(pl));
        Ok(match self.alias {
            AliasSum::Corrected(k) => {
                let spec = LatticeSpectrum::new(model, k.max(1))?;
                self.bins.iter().map(|b| b.g2 * spec.eval_unchecked(b.lambda)).collect()
            }
            AliasSum::Truncated(k) => {
                let spec = LatticeSpectrum::new(model, 1)?;
                self.bins.iter().map(|b| b.g2 * spec.partial_sum(b.lambda, k)).collect()
            }
        })
    }

    /// Periodogram of `y` (side `l`) summed into the frequency bins.
    pub fn binned(&self, y: &Grid) -> Result<Vec<f64>> {
        if y.side() != self.side {
            return Err(invalid(format!("window side {} does not match {}", y.side(), self.side)));
        }
        let per = periodogram(y);
        if per.iter().any(|v| !v.is_finite()) {
            return Err(invalid("periodogram is not finite"));
        }
        let mut s = vec![0.0; self.bins.len()];
        for (k, v) in per.iter().enumerate() {
            if let Some(id) = self.bin_of[k] {
                s[id] += v;
            }
        }
        Ok(s)
    }

    fn profile(&self, ibin: &[f64], inv_s0: &[f64], log_sum: f64) -> (f64, f64) {
        let f = self.mask_size() as f64;
        let phi1 = ibin.iter().zip(inv_s0).map(|(i, w)| i * w).sum::<f64>() / f;
        (f * phi1.ln() + log_sum + f, phi1)
    }

    /// Profiled objective and `φ̃₁` at arbitrary `φ₂`.
    pub fn objective(&self, ibin: &[f64], phi2: f64) -> Result<(f64, f64)> {
        let s0 = self.spectrum(phi2)?;
        let log_sum = self.bins.iter().zip(&s0).map(|(b, s)| b.count * s.ln()).sum();
        let inv: Vec<f64> = s0.iter().map(|s| 1.0 / s).collect();
        Ok(self.profile(ibin, &inv, log_sum))
    }

    /// Estimate from a window of the step-one filtered field.
    pub fn estimate(&self, y: &Grid) -> Result<WhittleEstimate> {
        let ibin = self.binned(y)?;
        let values: Vec<f64> = (0..self.nodes.len())
            .map(|k| self.profile(&ibin, &self.inv_s0[k], self.log_sums[k]).0)
            .collect();
        let mut best = 0;
        for (k, v) in values.iter().enumerate() {
            if v < &values[best] {
                best = k;
            }
        }
        if !values[best].is_finite() {
            return Err(Error::Numeric("Whittle objective is not finite".into()));
        }
        let last = self.nodes.len() - 1;
        let at_boundary = best == 0 || best == last;
        let (a, b) = (self.nodes[best.saturating_sub(1)], self.nodes[(best + 1).min(last)]);
        let f = |p: f64| self.objective(&ibin, p).map(|v| v.0).unwrap_or(f64::INFINITY);
        let (x, fx) = brent_min(&f, a, b, REFINE_TOL)?;
        let min = if values[best] < fx {
            Minimum { x: self.nodes[best], fx: values[best], at_boundary }
        } else {
            Minimum { x, fx, at_boundary }
        };
        let (objective, phi1_hat) = self.objective(&ibin, min.x)?;
        Ok(WhittleEstimate {
            phi2_hat: min.x,
            phi1_hat,
            objective,
            mask_size: self.mask_size(),
            at_boundary: min.at_boundary,
        })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn side(&self) -> usize {
        self.side
    }
}

/// Window of the step-one filtered field used by the likelihood estimators.
pub fn likelihood_window(x: &Grid, m: usize) -> Result<Grid> {
    let n = x.side();
    if n <= 2 * m + 1 {
        return Err(Error::LatticeTooSmall { n, min: 2 * m + 2 });
    }
    Ok(apply_filter(x, m, 1)?.window(0, 0, n - 2 * m))
}

/// Whittle profile estimate of `φ₂` from a field on `Λ_n`.
pub fn whittle_estimate(x: &Grid, m: usize, tau: f64) -> Result<WhittleEstimate> {
    let y = likelihood_window(x, m)?;
    WhittleBatch::new(y.side(), m, tau)?.estimate(&y)
}

/// Estimates at mask thresholds `10⁻⁴, 10⁻³, 10⁻²`.
pub fn whittle_mask_sensitivity(x: &Grid, m: usize) -> Result<[f64; 3]> {
    let y = likelihood_window(x, m)?;
    let mut out = [0.0; 3];
    for (o, tau) in out.iter_mut().zip([1e-4, 1e-3, 1e-2]) {
        *o = WhittleBatch::new(y.side(), m, tau)?.estimate(&y)?.phi2_hat;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodogram_parseval() {
        let y = Grid::from_fn(6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let p = periodogram(&y);
        let e: f64 = y.data().iter().map(|v| v * v).sum();
        assert!((p.iter().sum::<f64>() - e).abs() < 1e-10);
    }

    #[test]
    fn mask_excludes_symbol_zeros() {
        let b = WhittleBatch::new(10, 1, DEFAULT_MASK_TAU).unwrap();
        assert_eq!(b.mask_size(), 81);
    }

    #[test]
    fn objective_minimum_not_above_truth() {
        use crate::fieldsim::{FilteredSampler, ModelSpec};
        let spec = ModelSpec::power_law(1.0, 0.6).unwrap();
        let s = FilteredSampler::new(20, 1, &spec).unwrap();
        let y = s.sample(7, 0).values().window(0, 0, 18);
        let b = WhittleBatch::new(18, 1, DEFAULT_MASK_TAU).unwrap();
        let e = b.estimate(&y).unwrap();
        let ib = b.binned(&y).unwrap();
        assert!(e.objective <= b.objective(&ib, 0.6).unwrap().0 + 1e-9);
        assert!(e.phi1_hat > 0.0);
    }
}
