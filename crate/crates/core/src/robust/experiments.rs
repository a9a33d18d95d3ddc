use statrs::statistics::Statistics;

use crate::asymptotics::{asymptotic_sigma, estimator_cov, EstimatorScale, QuadSpec};
use crate::error::Result;
use crate::estimate::{mom_estimate, ls_slope, DomainMode};
use crate::fieldsim::{AnchoredSampler, FilteredSampler, JitterModel, JitterSampler, ModelSpec};
use crate::filter::{qv_from_filtered, quadratic_variations, TrimMode};
use crate::gcmodel::{domination_check, CovModel, Domain, LatticeModel, Matern, PowerLaw, DominationReport};
use crate::grid::Grid;
use crate::rng::{derive_seed, normals, replicate_rng, Purpose};
use crate::Exec;

use super::{prune_and_qv, retention_schedule, verify_deletion_bounds, SiteMask};

fn mean_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64
}

/// Paired thinning study on anchored power-law fields.
#[derive(Clone, Debug, PartialEq)]
pub struct ThinningConfig {
    pub ns: Vec<usize>,
    pub phi2: f64,
    pub a: f64,
    pub reps: usize,
    pub seed: u64,
    pub exec: Exec,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThinningCell {
    pub n: usize,
    pub retention: f64,
    pub mean_k: f64,
    pub mean_abs_dphi2: f64,
    pub sd_phi2: f64,
    /// `√N E|Q̃_j − Q_j|`.
    pub scaled_dq1: f64,
    pub scaled_dq2: f64,
}

pub fn thinning_experiment(cfg: &ThinningConfig) -> Result<Vec<ThinningCell>> {
    let m = PowerLaw::new(1.0, cfg.phi2)?.order_k() + 1;
    cfg.ns
        .iter()
        .map(|&n| {
            let seed = derive_seed(cfg.seed, &[n as u64, cfg.phi2.to_bits(), cfg.a.to_bits()]);
            let sampler = AnchoredSampler::new(n, &ModelSpec::power_law(1.0, cfg.phi2)?)?;
            let p = retention_schedule(n, cfg.a);
            let rows = cfg.exec.try_map(cfg.reps, |r| -> Result<[f64; 5]> {
                let x = sampler.sample(seed, r as u64).values();
                let mask = SiteMask::bernoulli(n, p, seed, r as u64)?;
                let full = quadratic_variations(&x, m, TrimMode::PerStep)?;
                let thin = prune_and_qv(&x, &mask, m)?;
                let a = mom_estimate(&full, DomainMode::Increasing)?.phi2_hat;
                let b = mom_estimate(&thin.stats()?, DomainMode::Increasing)?.phi2_hat;
                Ok([a, b - a, thin.tilde_q1 - full.q1(), thin.tilde_q2 - full.q2(), mask.k() as f64])
            })?;
            let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
            let sqrt_n = n as f64;
            Ok(ThinningCell {
                n,
                retention: p,
                mean_k: col(4).mean(),
                mean_abs_dphi2: mean_abs(&col(1)),
                sd_phi2: col(0).std_dev(),
                scaled_dq1: sqrt_n * mean_abs(&col(2)),
                scaled_dq2: sqrt_n * mean_abs(&col(3)),
            })
        })
        .collect()
}

/// Truth used by the jitter study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JitterTruth {
    PinnedPowerLaw { phi2: f64 },
    Matern { sigma2: f64, nu: f64, rho: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct JitterConfig {
    pub ns: Vec<usize>,
    pub truth: JitterTruth,
    pub m: usize,
    pub c: f64,
    pub reps: usize,
    pub seed: u64,
    pub exec: Exec,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JitterCell {
    pub n: usize,
    pub mean_abs_dq1: f64,
    pub mean_abs_dq2: f64,
    pub mean_phi2_clean: f64,
    pub mean_phi2_jittered: f64,
    pub sd_phi2_clean: f64,
    pub sd_phi2_jittered: f64,
}

pub fn jitter_experiment(cfg: &JitterConfig) -> Result<Vec<JitterCell>> {
    let model = match cfg.truth {
        JitterTruth::PinnedPowerLaw { phi2 } => JitterModel::PinnedPowerLaw(PowerLaw::new(1.0, phi2)?),
        JitterTruth::Matern { sigma2, nu, rho } => JitterModel::Matern(Matern::new(sigma2, nu, rho)?),
    };
    cfg.ns
        .iter()
        .map(|&n| {
            let seed = derive_seed(cfg.seed, &[n as u64, cfg.c.to_bits(), cfg.m as u64]);
            let sampler = JitterSampler::new(n, model, cfg.c)?;
            let rows = cfg.exec.try_map(cfg.reps, |r| -> Result<[f64; 4]> {
                let pair = sampler.sample_pair(seed, r as u64)?;
                let a = quadratic_variations(&pair.clean, cfg.m, TrimMode::PerStep)?;
                let b = quadratic_variations(&pair.jittered, cfg.m, TrimMode::PerStep)?;
                let pa = mom_estimate(&a, DomainMode::Fixed)?.phi2_hat;
                let pb = mom_estimate(&b, DomainMode::Fixed)?.phi2_hat;
                Ok([b.q1() - a.q1(), b.q2() - a.q2(), pa, pb])
            })?;
            let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
            Ok(JitterCell {
                n,
                mean_abs_dq1: mean_abs(&col(0)),
                mean_abs_dq2: mean_abs(&col(1)),
                mean_phi2_clean: col(2).mean(),
                mean_phi2_jittered: col(3).mean(),
                sd_phi2_clean: col(2).std_dev(),
                sd_phi2_jittered: col(3).std_dev(),
            })
        })
        .collect()
}

/// Moment estimation under a fixed-domain Matérn truth.
#[derive(Clone, Debug, PartialEq)]
pub struct MisspecConfig {
    pub sigma2: f64,
    pub nu: f64,
    pub rho: f64,
    pub m: usize,
    pub ns: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub grid: usize,
    pub exec: Exec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MisspecCell {
    pub n: usize,
    pub mean_phi2: f64,
    pub se_phi2: f64,
    /// `√M_int sd(φ̂₂)` against the power-law limit evaluated at `φ₂ = ν`.
    pub scaled_sd_phi2: f64,
    pub predicted_scaled_sd: f64,
    /// Mean of `n^{2φ̂₂} φ̂₁` and its limit `κ_ν`.
    pub mean_scale_limit: f64,
    pub kappa_nu: f64,
    pub domination: DominationReport,
}

pub fn misspecification_experiment(cfg: &MisspecConfig) -> Result<Vec<MisspecCell>> {
    let q = Matern::new(cfg.sigma2, cfg.nu, cfg.rho)?;
    let kappa_nu = q.tangent_power_law().phi1();
    let pl = LatticeModel::unit(CovModel::PowerLaw(PowerLaw::new(1.0, cfg.nu)?));
    let predicted = estimator_cov(&asymptotic_sigma(cfg.m, &pl, QuadSpec::default())?, EstimatorScale::LogPhi1)?.sd2;
    cfg.ns
        .iter()
        .map(|&n| {
            let seed = derive_seed(cfg.seed, &[n as u64, cfg.nu.to_bits(), cfg.m as u64]);
            let spec = ModelSpec::matern(cfg.sigma2, cfg.nu, cfg.rho, Domain::Fixed { n })?;
            let sampler = FilteredSampler::new(n, cfg.m, &spec)?;
            let rows = cfg.exec.try_map(cfg.reps, |r| -> Result<[f64; 2]> {
                let s = sampler.sample(seed, r as u64);
                let qv = qv_from_filtered(&s.values(), cfg.m, TrimMode::Common)?;
                let e = mom_estimate(&qv, DomainMode::Fixed)?;
                let scale = e.phi1_hat.map_or(f64::NAN, |p| (n as f64).powf(2.0 * e.phi2_hat) * p);
                Ok([e.phi2_hat, scale])
            })?;
            let phi2: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let scale: Vec<f64> = rows.iter().map(|r| r[1]).filter(|v| v.is_finite()).collect();
            let sd = (&phi2).std_dev();
            Ok(MisspecCell {
                n,
                mean_phi2: (&phi2).mean(),
                se_phi2: sd / (cfg.reps as f64).sqrt(),
                scaled_sd_phi2: (n - 2 * cfg.m) as f64 * sd,
                predicted_scaled_sd: predicted,
                mean_scale_limit: scale.mean(),
                kappa_nu,
                domination: domination_check(&q, cfg.m, 1.0 / n as f64, cfg.grid)?,
            })
        })
        .collect()
}

/// Deletion-perturbation scaling across lattice sizes and deletion counts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeletionCell {
    pub n: usize,
    pub k: usize,
    pub mean_fro: f64,
    pub mean_spectral: f64,
    pub max_rank: usize,
    /// `mean ‖Δ‖_F · N / k`.
    pub c_hat: f64,
}

pub fn deletion_scaling(ns: &[usize], ks: &[usize], masks: usize, m: usize, seed: u64, exec: Exec) -> Result<Vec<DeletionCell>> {
    let mut out = Vec::new();
    for &n in ns {
        for &k in ks {
            let s = derive_seed(seed, &[n as u64, k as u64]);
            let reps = exec.try_map(masks, |r| {
                verify_deletion_bounds(n, m, &SiteMask::random_uniform(n, k, s, r as u64)?).map(|v| v[0])
            })?;
            let mean_fro = reps.iter().map(|r| r.fro).sum::<f64>() / masks as f64;
            out.push(DeletionCell {
                n,
                k,
                mean_fro,
                mean_spectral: reps.iter().map(|r| r.spectral).sum::<f64>() / masks as f64,
                max_rank: reps.iter().map(|r| r.rank).max().unwrap_or(0),
                c_hat: mean_fro * (n * n) as f64 / k as f64,
            });
        }
    }
    Ok(out)
}

/// Slope of `log E|Q₁(Y + uε) − Q₁(Y)|` on `log u` for i.i.d. noise `ε`.
pub fn input_error_exponent(y: &Grid, m: usize, us: &[f64], reps: usize, seed: u64) -> Result<f64> {
    let base = qv_from_filtered(y, m, TrimMode::PerStep)?.q1();
    let mut logs = Vec::with_capacity(us.len());
    for &u in us {
        let mut acc = 0.0;
        for r in 0..reps {
            let e = normals(&mut replicate_rng(seed, Purpose::Misc, r as u64), y.len());
            let noisy = Grid::new(y.side(), y.data().iter().zip(&e).map(|(v, z)| v + u * z).collect())?;
            acc += (qv_from_filtered(&noisy, m, TrimMode::PerStep)?.q1() - base).abs();
        }
        logs.push((acc / reps as f64).ln());
    }
    let x: Vec<f64> = us.iter().map(|u| u.ln()).collect();
    Ok(ls_slope(&x, &logs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_jitter_gives_identical_estimates() {
        let cfg = JitterConfig {
            ns: vec![8],
            truth: JitterTruth::PinnedPowerLaw { phi2: 1.5 },
            m: 2,
            c: 0.0,
            reps: 3,
            seed: 1,
            exec: Exec::Sequential,
        };
        let c = jitter_experiment(&cfg).unwrap()[0];
        assert_eq!(c.mean_abs_dq1, 0.0);
        assert_eq!(c.mean_phi2_clean, c.mean_phi2_jittered);
    }

    #[test]
    fn full_retention_gives_zero_differences() {
        let cfg = ThinningConfig { ns: vec![10], phi2: 0.5, a: f64::INFINITY, reps: 3, seed: 2, exec: Exec::Sequential };
        let c = thinning_experiment(&cfg).unwrap()[0];
        assert_eq!((c.mean_k, c.mean_abs_dphi2), (0.0, 0.0));
    }

    #[test]
    fn input_error_is_linear_in_noise() {
        let spec = ModelSpec::power_law(1.0, 0.5).unwrap();
        let y = FilteredSampler::new(24, 1, &spec).unwrap().sample(5, 0).values();
        let s = input_error_exponent(&y, 1, &[1e-3, 1e-2, 1e-1], 20, 4).unwrap();
        assert!((0.8..=1.2).contains(&s), "{s}");
    }
}
