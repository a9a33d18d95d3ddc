//! Acceptance checks with pinned tolerances and reference values.

use std::fmt;

use twoscale::asymptotics::{
    asymptotic_sigma, delta_jacobian, dense_cov_qq, finite_cov_qq, trimming_variance, QuadSpec,
};
use twoscale::estimate::{ls_slope, mom_estimate, DomainMode};
use twoscale::fieldsim::{AnchoredSampler, ModelSpec};
use twoscale::filter::TrimMode;
use twoscale::gcmodel::{a_m, a_m_brute_force, a_one_closed_form, CovModel, Domain, LatticeModel, PowerLaw};
use twoscale::robust::{
    deletion_scaling, jitter_experiment, misspecification_experiment, thinning_experiment, JitterConfig, JitterTruth,
    MisspecConfig, ThinningConfig,
};
use twoscale::{exec, Exec};

use crate::config::{DomainKind, EstimatorKind, ExperimentConfig, ExperimentKind};
use crate::error::CliResult;
use crate::harness::{
    cell_seed, exec_for, mom_theory, run_estimator_cell, run_fig2, run_mom_cell, MomCell, TheorySource,
};

/// Published theory triples `(sd log φ̂₁, sd φ̂₂, corr)` for the `m = 1` table.
pub const REFERENCE_TABLE1: [(usize, f64, [f64; 3]); 8] = [
    (30, 0.5, [2.4326, 1.4853, 0.734]),
    (30, 0.8, [1.7274, 1.4298, 0.315]),
    (40, 0.5, [2.4492, 1.4888, 0.735]),
    (40, 0.8, [1.7405, 1.4365, 0.323]),
    (50, 0.5, [2.4590, 1.4909, 0.735]),
    (50, 0.8, [1.7483, 1.4405, 0.328]),
    (60, 0.5, [2.4654, 1.4923, 0.736]),
    (60, 0.8, [1.7534, 1.4432, 0.331]),
];

/// Published `(n, φ₂, √N sd th, m₂/m₁ th)` for the `m = 2` table.
pub const REFERENCE_TABLE2: [(usize, f64, f64, f64); 18] = [
    (30, 1.2, 2.3053, 5.28131),
    (30, 1.5, 2.2350, 8.00194),
    (30, 1.8, 2.1638, 12.13060),
    (35, 1.2, 2.3054, 5.28119),
    (35, 1.5, 2.2351, 8.00137),
    (35, 1.8, 2.1641, 12.12834),
    (40, 1.2, 2.3054, 5.28114),
    (40, 1.5, 2.2351, 8.00112),
    (40, 1.8, 2.1643, 12.12730),
    (45, 1.2, 2.3054, 5.28112),
    (45, 1.5, 2.2352, 8.00101),
    (45, 1.8, 2.1644, 12.12676),
    (50, 1.2, 2.3054, 5.28111),
    (50, 1.5, 2.2352, 8.00095),
    (50, 1.8, 2.1644, 12.12647),
    (60, 1.2, 2.3054, 5.28110),
    (60, 1.5, 2.2352, 8.00090),
    (60, 1.8, 2.1645, 12.12619),
];

/// Published means (SD) at `n = 50`: bilinear, Laplacian, Whittle, REML.
pub const REFERENCE_TABLE3: [(f64, [(f64, f64); 4]); 4] = [
    (0.2, [(0.1990, 0.0312), (0.1993, 0.0268), (0.1709, 0.0288), (0.2012, 0.0150)]),
    (0.4, [(0.4037, 0.0295), (0.4031, 0.0254), (0.4039, 0.0271), (0.4020, 0.0194)]),
    (0.6, [(0.6009, 0.0307), (0.6001, 0.0267), (0.6101, 0.0286), (0.6004, 0.0226)]),
    (0.8, [(0.8014, 0.0293), (0.8011, 0.0268), (0.8108, 0.0281), (0.8010, 0.0231)]),
];

pub const TOL_RATIO_REL: f64 = 1e-10;
pub const TOL_A1_REL: f64 = 1e-12;
pub const TOL_THEORY_ABS: f64 = 0.01;
pub const MC_SE_MULTIPLE: f64 = 3.0;
pub const MIN_CELL_PASS_FRACTION: f64 = 0.9;
pub const TOL_FISHER_REL: f64 = 0.15;
pub const MAX_TAU1_ULPS: u64 = 4;
pub const MIN_FD_CORR: f64 = 0.95;
pub const TOL_STABILIZED_REL: f64 = 0.15;
pub const TRIM_SLOPE: (f64, f64) = (-1.0, 0.15);
pub const MAX_DELETION_C_SPREAD: f64 = 1.25;
pub const THINNING_SD_FRACTION: f64 = 0.5;
pub const TOL_JITTER_RATIO: f64 = 0.15;
pub const TOL_MATERN_MEAN: f64 = 0.02;
pub const TOL_DENSE_REL: f64 = 1e-10;
pub const TOL_JACOBIAN_REL: f64 = 1e-6;
pub const TOL_ASYMPTOTIC_REL: f64 = 0.02;

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "exact two-scale ratio"),
    (2, "closed-form a_1"),
    (3, "m=1 table theory columns"),
    (4, "m=2 table theory sd"),
    (5, "m=1 and m=2 table empirical columns"),
    (6, "four-estimator comparison"),
    (7, "FD/ID exactness"),
    (8, "FD degeneracy and stabilization"),
    (9, "trimming negligibility"),
    (10, "robustness suite"),
    (11, "numerical cross-validation"),
];

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} {status}: {}; {}", self.id, self.title, self.detail)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub threads: usize,
}

fn pl(phi2: f64) -> CliResult<LatticeModel> {
    Ok(LatticeModel::unit(CovModel::PowerLaw(PowerLaw::new(1.0, phi2)?)))
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn ulps(a: f64, b: f64) -> u64 {
    (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
}

/// Runs criterion `id` inside a pool of the requested size.
pub fn run_criterion(id: u8, opts: &VerifyOptions) -> CliResult<Check> {
    let title = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown");
    let ex = exec_for(opts.threads);
    let (pass, detail) = exec::with_threads(opts.threads, || -> CliResult<(bool, String)> {
        match id {
            1 => c1(),
            2 => c2(),
            3 => c3(),
            4 => c4(),
            5 => c5(opts.seed, ex),
            6 => c6(opts.seed, ex),
            7 => c7(opts.seed),
            8 => c8(opts.seed, ex),
            9 => c9(),
            10 => c10(opts.seed, ex),
            11 => c11(),
            _ => Ok((false, format!("no criterion {id}"))),
        }
    })?;
    Ok(Check { id, title, pass, detail })
}

fn c1() -> CliResult<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (m, phi2) in [(1, 0.3), (1, 0.5), (1, 0.8), (2, 1.2), (2, 1.5), (2, 1.8)] {
        let p = finite_cov_qq(16, m, &pl(phi2)?, TrimMode::PerStep)?;
        worst = worst.max(rel(p.q2 / p.q1, 4f64.powf(phi2)));
    }
    Ok((worst <= TOL_RATIO_REL, format!("max relative error {worst:.2e} (tol {TOL_RATIO_REL:e})")))
}

fn c2() -> CliResult<(bool, String)> {
    let mut worst: f64 = 0.0;
    for k in 1..=17 {
        let phi2 = 0.05 * k as f64;
        worst = worst.max(rel(a_m_brute_force(phi2, 1)?, a_one_closed_form(phi2)));
    }
    Ok((worst <= TOL_A1_REL, format!("17 values, max relative error {worst:.2e} (tol {TOL_A1_REL:e})")))
}

fn c3() -> CliResult<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (n, phi2, want) in REFERENCE_TABLE1 {
        let t = mom_theory(n, phi2, 1, TheorySource::FiniteLattice)?;
        for (g, w) in [t.sd_log_phi1, t.sd_phi2, t.corr].iter().zip(want) {
            worst = worst.max((g - w).abs());
        }
    }
    Ok((worst <= TOL_THEORY_ABS, format!("8 cells, max abs deviation {worst:.5} (tol {TOL_THEORY_ABS})")))
}

fn c4() -> CliResult<(bool, String)> {
    let (mut sd_worst, mut taylor_worst, mut torus_worst): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut taylor_misses = 0;
    for (n, phi2, sd, ratio) in REFERENCE_TABLE2 {
        let t = mom_theory(n, phi2, 2, TheorySource::Torus)?;
        sd_worst = sd_worst.max((t.sd_phi2 - sd).abs());
        let d = (t.ratio_taylor - ratio).abs();
        taylor_worst = taylor_worst.max(d);
        taylor_misses += usize::from(d > TOL_THEORY_ABS);
        torus_worst = torus_worst.max((t.ratio - ratio).abs());
    }
    let ratio_note = if taylor_misses == 0 {
        format!("m2/m1 Taylor form within tol (max {taylor_worst:.4})")
    } else {
        format!(
            "OPEN DISCREPANCY m2/m1: Taylor form misses {taylor_misses}/18 cells (max abs {taylor_worst:.4}); \
             computed torus mean ratio max abs {torus_worst:.4}"
        )
    };
    Ok((
        sd_worst <= TOL_THEORY_ABS,
        format!("18 cells, sd max abs deviation {sd_worst:.5} (tol {TOL_THEORY_ABS}); {ratio_note}"),
    ))
}

fn mom_cells(kind: ExperimentKind, seed: u64, ex: Exec, source: TheorySource) -> CliResult<Vec<MomCell>> {
    let mut cfg = ExperimentConfig::preset(kind);
    cfg.seed = seed;
    let mut out = Vec::new();
    for &n in &cfg.ns {
        for &phi2 in &cfg.params {
            let s = cell_seed(seed, n, phi2, cfg.estimator_set_id());
            out.push(run_mom_cell(n, phi2, cfg.order_for(phi2), cfg.reps, s, ex, source)?);
        }
    }
    Ok(out)
}

fn c5(seed: u64, ex: Exec) -> CliResult<(bool, String)> {
    let mut failing = Vec::new();
    let mut total = 0;
    for (kind, source, with_log) in [
        (ExperimentKind::Table1, TheorySource::FiniteLattice, true),
        (ExperimentKind::Table2, TheorySource::Torus, false),
    ] {
        for c in mom_cells(kind, seed, ex, source)? {
            total += 1;
            let bad: Vec<String> = c.flags(with_log).into_iter().filter(|f| !f.pass).map(|f| f.check).collect();
            if !bad.is_empty() {
                failing.push(format!("m={} {} [{}]", c.m, c.label(), bad.join(",")));
            }
        }
    }
    let frac = (total - failing.len()) as f64 / total as f64;
    Ok((
        frac >= MIN_CELL_PASS_FRACTION,
        format!(
            "{}/{total} cells within {MC_SE_MULTIPLE} MC SE (need {:.0}%); failing: {}",
            total - failing.len(),
            100.0 * MIN_CELL_PASS_FRACTION,
            if failing.is_empty() { "none".into() } else { failing.join("; ") }
        ),
    ))
}

fn c6(seed: u64, ex: Exec) -> CliResult<(bool, String)> {
    let cfg = ExperimentConfig { seed, ..ExperimentConfig::preset(ExperimentKind::Table3) };
    let ests = [EstimatorKind::Bilinear, EstimatorKind::Laplacian, EstimatorKind::Whittle, EstimatorKind::Reml];
    let n = 50;
    let mut misses = Vec::new();
    let mut parts = Vec::new();
    for (phi2, reference) in REFERENCE_TABLE3 {
        let s = cell_seed(seed, n, phi2, cfg.estimator_set_id());
        let cells = run_estimator_cell(n, phi2, 1, cfg.reps, s, ex, &ests, DomainKind::Increasing)?;
        for (c, (want, _)) in cells.iter().zip(reference) {
            let z = (c.phi2_hat.mean - want) / c.phi2_hat.se;
            if z.abs() > MC_SE_MULTIPLE {
                misses.push(format!("{} phi2={phi2} mean {:.4} vs {want} ({z:+.1} SE)", c.estimator.as_str(), c.phi2_hat.mean));
            }
            if let Some(f) = c.fisher_sd {
                let r = rel(f, c.phi2_hat.sd);
                parts.push(format!("phi2={phi2} REML sd {:.4} Fisher {f:.4}", c.phi2_hat.sd));
                if r > TOL_FISHER_REL {
                    misses.push(format!("REML phi2={phi2} Fisher sd {f:.4} vs empirical {:.4}", c.phi2_hat.sd));
                }
            }
        }
    }
    Ok((
        misses.is_empty(),
        format!(
            "16 means within {MC_SE_MULTIPLE} SE, Fisher within {:.0}%: {}; misses: {}",
            100.0 * TOL_FISHER_REL,
            parts.join(", "),
            if misses.is_empty() { "none".into() } else { misses.join("; ") }
        ),
    ))
}

fn c7(seed: u64) -> CliResult<(bool, String)> {
    let (n, phi2, m) = (40, 0.5, 1);
    let id = AnchoredSampler::new(n, &ModelSpec::power_law(1.0, phi2)?)?;
    let fd = AnchoredSampler::new(n, &ModelSpec::power_law(1.0, phi2)?.with_domain(Domain::Fixed { n }))?;
    let mut bitwise = true;
    let mut worst = 0;
    for r in 0..20 {
        let a = mom_estimate(&id.sample(seed, r).qv(m, TrimMode::PerStep)?, DomainMode::Increasing)?;
        let b = mom_estimate(&fd.sample(seed, r).qv(m, TrimMode::PerStep)?, DomainMode::Fixed)?;
        bitwise &= a.phi2_hat.to_bits() == b.phi2_hat.to_bits();
        if let (Some(p1), Some(t1)) = (a.phi1_hat, b.fd_tau1_hat) {
            worst = worst.max(ulps(t1, (n as f64).powf(-2.0 * phi2) * p1));
        } else {
            worst = u64::MAX;
        }
    }
    Ok((
        bitwise && worst <= MAX_TAU1_ULPS,
        format!("20 replicates at n={n}: phi2 bitwise equal {bitwise}; tau1 max {worst} ulp (tol {MAX_TAU1_ULPS})"),
    ))
}

fn c8(seed: u64, ex: Exec) -> CliResult<(bool, String)> {
    let (n, phi2) = (60, 0.5);
    let cfg = ExperimentConfig::preset(ExperimentKind::Fig2);
    let d = run_fig2(n, phi2, cfg.reps, cell_seed(seed, n, phi2, cfg.estimator_set_id()), ex)?;
    let pairs = [(0, 0), (0, 1), (1, 1)];
    let devs: Vec<f64> = pairs.iter().map(|&(i, j)| rel(d.stabilized_cov[i][j], d.omega[i][j])).collect();
    let worst = devs.iter().cloned().fold(0.0, f64::max);
    Ok((
        d.corr_fd >= MIN_FD_CORR && worst <= TOL_STABILIZED_REL,
        format!(
            "FD corr {:.4} (theory {:.4}, need >= {MIN_FD_CORR}); ID corr {:.3}; sqrt(M_int) sd(phi2) {:.3}; \
             stabilized cov vs Omega rel dev {:.3}/{:.3}/{:.3} (tol {TOL_STABILIZED_REL})",
            d.corr_fd, d.corr_fd_theory, d.corr_id, d.scaled_sd_phi2, devs[0], devs[1], devs[2]
        ),
    ))
}

fn c9() -> CliResult<(bool, String)> {
    let model = pl(0.5)?;
    let ns = [20usize, 40, 80];
    let v = ns.iter().map(|&n| trimming_variance(n, 1, &model)).collect::<Result<Vec<_>, _>>()?;
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = v.iter().map(|v| v.ln()).collect();
    let slope = ls_slope(&x, &y);
    Ok((
        (slope - TRIM_SLOPE.0).abs() <= TRIM_SLOPE.1,
        format!("variances {:.3}/{:.3}/{:.3}, slope {slope:.3} (need {} +/- {})", v[0], v[1], v[2], TRIM_SLOPE.0, TRIM_SLOPE.1),
    ))
}

fn c10(seed: u64, ex: Exec) -> CliResult<(bool, String)> {
    // (a) deletion bounds
    let ns = [16, 24, 32];
    let cells = deletion_scaling(&ns, &[1, 4, 16], 10, 1, seed, ex)?;
    let c_n: Vec<f64> =
        ns.iter().map(|&n| cells.iter().filter(|c| c.n == n).map(|c| c.c_hat).fold(0.0, f64::max)).collect();
    let c_star = c_n.iter().cloned().fold(0.0, f64::max);
    let spread = c_star / c_n.iter().cloned().fold(f64::INFINITY, f64::min);
    let bound_ok = cells.iter().all(|c| c.mean_fro <= c_star * c.k as f64 / (c.n * c.n) as f64 * (1.0 + 1e-12));
    let a_ok = bound_ok && spread <= MAX_DELETION_C_SPREAD;
    // (b) thinning
    let th = thinning_experiment(&ThinningConfig { ns: vec![40], phi2: 0.5, a: 0.75, reps: 200, seed, exec: ex })?[0];
    let b_ok = th.mean_abs_dphi2 < THINNING_SD_FRACTION * th.sd_phi2;
    // (c) jitter
    let jc = JitterConfig {
        ns: vec![16, 32],
        truth: JitterTruth::PinnedPowerLaw { phi2: 1.5 },
        m: 2,
        c: 0.4,
        reps: 100,
        seed,
        exec: ex,
    };
    let j = jitter_experiment(&jc)?;
    let ratio = j[1].mean_abs_dq1 / j[0].mean_abs_dq1;
    let target = 2f64.powf(-1.5);
    let c_ok = (ratio - target).abs() <= TOL_JITTER_RATIO;
    // (d) Matérn misspecification
    let mc = MisspecConfig { sigma2: 1.0, nu: 0.5, rho: 1.0, m: 1, ns: vec![60], reps: 400, seed, grid: 101, exec: ex };
    let mt = &misspecification_experiment(&mc)?[0];
    let d_ok = (mt.mean_phi2 - 0.5).abs() < TOL_MATERN_MEAN && mt.domination.all_pass();
    let mark = |b: bool| if b { "ok" } else { "FAIL" };
    Ok((
        a_ok && b_ok && c_ok && d_ok,
        format!(
            "(a) {}: C_n {:.2}/{:.2}/{:.2}, spread {spread:.3} (max {MAX_DELETION_C_SPREAD}), bound holds {bound_ok}; \
             (b) {}: mean|dphi2| {:.4} vs sd {:.4}; \
             (c) {}: E|dQ1| ratio {ratio:.3} vs {target:.3} +/- {TOL_JITTER_RATIO}; \
             (d) {}: mean phi2 {:.4}, domination {}/{} violations",
            mark(a_ok),
            c_n[0],
            c_n[1],
            c_n[2],
            mark(b_ok),
            th.mean_abs_dphi2,
            th.sd_phi2,
            mark(c_ok),
            mark(d_ok),
            mt.mean_phi2,
            mt.domination.violations,
            mt.domination.points
        ),
    ))
}

fn c11() -> CliResult<(bool, String)> {
    let mut dense_worst: f64 = 0.0;
    for (m, phi2) in [(1, 0.5), (2, 1.5)] {
        for n in [10, 12, 14] {
            let model = pl(phi2)?;
            let a = dense_cov_qq(n, m, &model, TrimMode::PerStep)?.sigma_qq;
            let b = finite_cov_qq(n, m, &model, TrimMode::PerStep)?.sigma_qq;
            for i in 0..2 {
                for j in 0..2 {
                    dense_worst = dense_worst.max(rel(a[i][j], b[i][j]));
                }
            }
        }
    }
    let map = |q1: f64, q2: f64, m: usize| -> CliResult<[f64; 2]> {
        let phi2 = 0.5 * (q2 / q1).log2();
        Ok([q1 / a_m(phi2, m)?, phi2])
    };
    let mut jac_worst: f64 = 0.0;
    for (phi2, m) in [(0.5, 1), (0.8, 1), (1.5, 2)] {
        let q1 = a_m(phi2, m)?;
        let q2 = q1 * 4f64.powf(phi2);
        let jac = delta_jacobian(q1, q2, m)?;
        for (k, q) in [q1, q2].into_iter().enumerate() {
            let h = q * 1e-5;
            let (p, n) = if k == 0 {
                (map(q1 + h, q2, m)?, map(q1 - h, q2, m)?)
            } else {
                (map(q1, q2 + h, m)?, map(q1, q2 - h, m)?)
            };
            for i in 0..2 {
                let fd = (p[i] - n[i]) / (2.0 * h);
                jac_worst = jac_worst.max((fd - jac.j[i][k]).abs() / jac.j[i][k].abs());
            }
        }
    }
    let model = pl(0.5)?;
    let lim = asymptotic_sigma(1, &model, QuadSpec::default())?.sigma_qq;
    let f40 = finite_cov_qq(40, 1, &model, TrimMode::Common)?.sigma_qq;
    let f80 = finite_cov_qq(80, 1, &model, TrimMode::Common)?.sigma_qq;
    let mut asym_worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            asym_worst = asym_worst.max(rel(2.0 * f80[i][j] - f40[i][j], lim[i][j]));
        }
    }
    Ok((
        dense_worst <= TOL_DENSE_REL && jac_worst <= TOL_JACOBIAN_REL && asym_worst <= TOL_ASYMPTOTIC_REL,
        format!(
            "dense vs lag-sum {dense_worst:.1e} (tol {TOL_DENSE_REL:e}); Jacobian vs central differences \
             {jac_worst:.1e} (tol {TOL_JACOBIAN_REL:e}); asymptotic Sigma vs extrapolation {asym_worst:.4} \
             (tol {TOL_ASYMPTOTIC_REL})"
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_criteria_pass() {
        let opts = VerifyOptions { seed: 1, threads: 0 };
        for id in [1, 2, 3, 9] {
            let c = run_criterion(id, &opts).unwrap();
            assert!(c.pass, "{c}");
        }
    }

    #[test]
    fn ulp_distance() {
        assert_eq!(ulps(1.0, 1.0), 0);
        assert_eq!(ulps(1.0, f64::from_bits(1.0f64.to_bits() + 3)), 3);
    }
}
