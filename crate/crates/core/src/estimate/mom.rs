use crate::error::{Error, Result};
use crate::filter::QvStats;
use crate::gcmodel::{a_m, INTEGER_GUARD};

/// Distance from an integer within which `φ̂₂` is treated as out of domain.
pub const INTEGER_MARGIN: f64 = 1e-3;

/// Whether the sample is read on the unit lattice or on `[0,1]²` at spacing `1/n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DomainMode {
    #[default]
    Increasing,
    Fixed,
}

/// Two-scale moment estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomEstimate {
    pub phi2_hat: f64,
    /// `None` when `φ̂₂` is out of domain.
    pub phi1_hat: Option<f64>,
    pub log_phi1_hat: Option<f64>,
    pub qv: QvStats,
    pub m: usize,
    pub domain_mode: DomainMode,
    /// Lattice scale of a fixed-domain sample, `τ̂₁`.
    pub fd_tau1_hat: Option<f64>,
    pub in_domain: bool,
}

/// True when `φ₂` lies in `(0, upper)` away from integers.
pub fn phi2_in_domain(phi2: f64, upper: f64) -> bool {
    phi2 > 0.0 && phi2 < upper && (phi2 - phi2.round()).abs() >= INTEGER_MARGIN.max(INTEGER_GUARD)
}

/// `φ̂₂ = ½ log₂(Q₂/Q₁)` and `φ̂₁ = Q₁/a_m(φ̂₂)` with `a` the mean constant.
pub(crate) fn moment_pair(qv: &QvStats, upper: f64, a: impl Fn(f64) -> Result<f64>) -> Result<(f64, Option<f64>, bool)> {
    if qv.is_degenerate() {
        return Err(Error::Numeric("degenerate field: a quadratic variation is zero".into()));
    }
    let phi2 = 0.5 * qv.ratio().log2();
    if !phi2_in_domain(phi2, upper) {
        return Ok((phi2, None, false));
    }
    Ok((phi2, Some(qv.q1() / a(phi2)?), true))
}

pub fn mom_estimate(qv: &QvStats, mode: DomainMode) -> Result<MomEstimate> {
    let m = qv.order();
    let (phi2_hat, phi1_hat, in_domain) = moment_pair(qv, m as f64, |p| a_m(p, m))?;
    Ok(MomEstimate {
        phi2_hat,
        phi1_hat,
        log_phi1_hat: phi1_hat.map(f64::ln),
        qv: *qv,
        m,
        domain_mode: mode,
        fd_tau1_hat: if mode == DomainMode::Fixed { phi1_hat } else { None },
        in_domain,
    })
}

/// Fixed-domain quantities derived from a moment estimate on `N` sites.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdQuantities {
    pub tau1_hat: f64,
    pub tau2_hat: f64,
    /// `log(N^{τ̂₂} τ̂₁)`, the plug-in estimate of `log φ₁`.
    pub log_phi1_plugin: f64,
    /// `τ̂₁/τ₁ − 1`, `τ̂₂ − τ₂` and `(1 + U) e^{V log N} − 1` when truth is given.
    pub u: Option<f64>,
    pub v: Option<f64>,
    pub w: Option<f64>,
    /// `A_N (log(N^{τ̂₂} τ̂₁/φ₁), τ̂₂ − τ₂)`, equal to `(log(τ̂₁/τ₁), τ̂₂ − τ₂)`.
    pub stabilized: Option<[f64; 2]>,
}

/// Continuum truth `(φ₁, φ₂)` of a fixed-domain power law.
pub fn fd_transform(est: &MomEstimate, n_sites: f64, truth: Option<(f64, f64)>) -> Result<FdQuantities> {
    let tau1_hat = est
        .phi1_hat
        .ok_or_else(|| Error::InvalidParameter("estimate is out of domain; no scale available".into()))?;
    let tau2_hat = est.phi2_hat;
    let log_n = n_sites.ln();
    let log_phi1_plugin = tau2_hat * log_n + tau1_hat.ln();
    let (u, v, w, stabilized) = match truth {
        Some((phi1, phi2)) => {
            let tau1 = phi1 * n_sites.powf(-phi2);
            let u = tau1_hat / tau1 - 1.0;
            let v = tau2_hat - phi2;
            let w = (1.0 + u) * (log_n * v).exp() - 1.0;
            let x1 = log_phi1_plugin - phi1.ln();
            (Some(u), Some(v), Some(w), Some([x1 - log_n * v, v]))
        }
        None => (None, None, None, None),
    };
    Ok(FdQuantities { tau1_hat, tau2_hat, log_phi1_plugin, u, v, w, stabilized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::TrimMode;

    fn stats(q1: f64, q2: f64, m: usize) -> QvStats {
        QvStats::new(q1, q2, 100, 81, m, TrimMode::PerStep).unwrap()
    }

    #[test]
    fn exact_ratio_inverts() {
        let a = a_m(0.5, 1).unwrap();
        let e = mom_estimate(&stats(a, 2.0 * a, 1), DomainMode::Increasing).unwrap();
        assert!((e.phi2_hat - 0.5).abs() < 1e-15);
        assert!((e.phi1_hat.unwrap() - 1.0).abs() < 1e-14);
        for k in 1..40 {
            let phi = 0.05 * k as f64;
            if (phi - 1.0f64).abs() < 0.01 {
                continue;
            }
            let m = if phi < 1.0 { 1 } else { 2 };
            let e = mom_estimate(&stats(1.0, 4f64.powf(phi), m), DomainMode::Increasing).unwrap();
            assert!((e.phi2_hat - phi).abs() < 1e-14);
        }
    }

    #[test]
    fn equal_variations_flagged() {
        let e = mom_estimate(&stats(1.0, 1.0, 1), DomainMode::Increasing).unwrap();
        assert_eq!(e.phi2_hat, 0.0);
        assert!(!e.in_domain && e.phi1_hat.is_none());
        assert!(mom_estimate(&stats(0.0, 1.0, 1), DomainMode::Increasing).is_err());
    }

    #[test]
    fn stabilized_is_log_scale_error() {
        let a = a_m(0.5, 1).unwrap();
        let n_sites = 900.0f64;
        let tau1 = n_sites.powf(-0.5);
        let qv = stats(1.1 * a * tau1, 1.1 * a * tau1 * 4f64.powf(0.52), 1);
        let e = mom_estimate(&qv, DomainMode::Fixed).unwrap();
        let fd = fd_transform(&e, n_sites, Some((1.0, 0.5))).unwrap();
        let s = fd.stabilized.unwrap();
        assert!((s[0] - (fd.tau1_hat / tau1).ln()).abs() < 1e-12);
        assert!((s[1] - 0.02).abs() < 1e-12);
        assert!((fd.w.unwrap() + 1.0 - n_sites.powf(fd.v.unwrap()) * (1.0 + fd.u.unwrap())).abs() < 1e-12);
    }
}
