//! Seeded Monte Carlo experiments over design cells.

use statrs::statistics::Statistics;
use twoscale::asymptotics::{
    estimator_cov, fd_predictions, finite_cov_qq, taylor_ratio_mean, torus_cov_qq, CovPrediction, EstimatorScale,
};
use twoscale::estimate::{
    empirical_variogram, fd_transform, laplacian_estimate, likelihood_window, ls_slope, mom_estimate, AliasSum,
    DomainMode, RemlProblem, WhittleBatch, DEFAULT_MASK_TAU,
};
use twoscale::fieldsim::{AnchoredSampler, FieldSample, ModelSpec, SampleKind};
use twoscale::filter::TrimMode;
use twoscale::gcmodel::{CovModel, Domain, LatticeModel, PowerLaw};
use twoscale::rng::derive_seed;
use twoscale::robust::{
    deletion_scaling, jitter_experiment, misspecification_experiment, thinning_experiment, JitterConfig, JitterTruth,
    MisspecConfig, ThinningConfig,
};
use twoscale::{exec, Exec};

use crate::config::{DomainKind, EstimatorKind, ExperimentConfig, ExperimentKind};
use crate::error::CliResult;
use crate::report::{CellFlag, McSummary, Table, Value};

/// Truncation of the aliased spectrum that reproduces the reference Whittle column.
pub const REFERENCE_WHITTLE_ALIAS: AliasSum = AliasSum::Truncated(6);

/// Largest fraction of failed replicates a cell tolerates.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// Sample mean, SD and Monte Carlo standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    pub count: usize,
}

impl Moments {
    pub fn of(x: &[f64]) -> Self {
        let count = x.len();
        let mean = x.mean();
        let sd = if count > 1 { x.std_dev() } else { f64::NAN };
        Self { mean, sd, se: sd / (count as f64).sqrt(), count }
    }

    /// Normal-theory standard error of the SD.
    pub fn sd_se(&self) -> f64 {
        self.sd / (2.0 * (self.count as f64 - 1.0)).sqrt()
    }
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    x.covariance(y) / (x.std_dev() * y.std_dev())
}

fn cov2(x: &[f64], y: &[f64]) -> [[f64; 2]; 2] {
    let c = x.covariance(y);
    [[x.variance(), c], [c, y.variance()]]
}

fn within(x: f64, target: f64, se: f64, k: f64) -> bool {
    (x - target).abs() <= k * se
}

/// Execution policy for a thread budget.
pub fn exec_for(threads: usize) -> Exec {
    if threads == 1 {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

/// Seed of one design cell.
pub fn cell_seed(master: u64, n: usize, param: f64, estimator_set: u64) -> u64 {
    derive_seed(master, &[n as u64, param.to_bits(), estimator_set])
}

fn power_law(phi2: f64) -> CliResult<LatticeModel> {
    Ok(LatticeModel::unit(CovModel::PowerLaw(PowerLaw::new(1.0, phi2)?)))
}

/// Which theory the moment tables compare against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TheorySource {
    /// Exact finite-lattice covariances on the common interior.
    FiniteLattice,
    /// Riemann sum over the torus Fourier grid.
    Torus,
}

/// Delta-method theory columns for one moment cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomTheory {
    pub kind: &'static str,
    pub sd_log_phi1: f64,
    pub sd_phi2: f64,
    pub corr: f64,
    pub ratio: f64,
    pub ratio_taylor: f64,
    pub omega: [[f64; 2]; 2],
}

pub fn mom_theory(n: usize, phi2: f64, m: usize, source: TheorySource) -> CliResult<MomTheory> {
    let model = power_law(phi2)?;
    let pred: CovPrediction = match source {
        TheorySource::FiniteLattice => finite_cov_qq(n, m, &model, TrimMode::Common)?,
        TheorySource::Torus => torus_cov_qq(n, m, &model)?,
    };
    let e = estimator_cov(&pred, EstimatorScale::LogPhi1)?;
    Ok(MomTheory {
        kind: pred.kind.tag(),
        sd_log_phi1: e.sd1,
        sd_phi2: e.sd2,
        corr: e.corr,
        ratio: pred.q2 / pred.q1,
        ratio_taylor: taylor_ratio_mean(&pred),
        omega: e.omega,
    })
}

/// Bilinear moment estimates of one `(n, φ₂)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct MomCell {
    pub n: usize,
    pub phi2: f64,
    pub m: usize,
    pub reps: usize,
    /// `√M_int` with `M_int = (n − 2m)²`.
    pub root_m_int: f64,
    pub log_phi1: Moments,
    pub phi2_hat: Moments,
    /// `Q₂/Q₁`.
    pub ratio: Moments,
    pub corr: f64,
    pub out_of_domain: usize,
    pub theory: MomTheory,
}

impl MomCell {
    pub fn label(&self) -> String {
        format!("n={} phi2={}", self.n, self.phi2)
    }

    /// Mean and scaled-SD agreement with theory within three MC standard errors.
    pub fn flags(&self, with_log_phi1: bool) -> Vec<CellFlag> {
        let s = self.root_m_int;
        let mut out = vec![
            ("mean_phi2", within(self.phi2_hat.mean, self.phi2, self.phi2_hat.se, 3.0)),
            ("sd_phi2", within(s * self.phi2_hat.sd, self.theory.sd_phi2, s * self.phi2_hat.sd_se(), 3.0)),
        ];
        if with_log_phi1 {
            out.push(("mean_log_phi1", within(self.log_phi1.mean, 0.0, self.log_phi1.se, 3.0)));
            out.push((
                "sd_log_phi1",
                within(s * self.log_phi1.sd, self.theory.sd_log_phi1, s * self.log_phi1.sd_se(), 3.0),
            ));
        }
        out.push(("failure_rate", self.out_of_domain as f64 <= MAX_FAILURE_RATE * self.reps as f64));
        out.into_iter().map(|(c, pass)| CellFlag { cell: self.label(), check: c.into(), pass }).collect()
    }
}

fn anchored(n: usize, phi2: f64, domain: Domain) -> CliResult<AnchoredSampler> {
    Ok(AnchoredSampler::new(n, &ModelSpec::power_law(1.0, phi2)?.with_domain(domain))?)
}

/// Runs one bilinear cell on anchored increasing-domain fields.
pub fn run_mom_cell(
    n: usize,
    phi2: f64,
    m: usize,
    reps: usize,
    seed: u64,
    exec: Exec,
    source: TheorySource,
) -> CliResult<MomCell> {
    let sampler = anchored(n, phi2, Domain::Increasing)?;
    let rows = exec.try_map(reps, |r| -> CliResult<(f64, Option<f64>, f64)> {
        let q = sampler.sample(seed, r as u64).qv(m, TrimMode::Common)?;
        let e = mom_estimate(&q, DomainMode::Increasing)?;
        Ok((e.phi2_hat, e.log_phi1_hat, q.ratio()))
    })?;
    let phi2s: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let paired: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.1.map(|l| (l, r.0))).collect();
    let logs: Vec<f64> = paired.iter().map(|p| p.0).collect();
    let matched: Vec<f64> = paired.iter().map(|p| p.1).collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.2).collect();
    Ok(MomCell {
        n,
        phi2,
        m,
        reps,
        root_m_int: (n - 2 * m) as f64,
        log_phi1: Moments::of(&logs),
        phi2_hat: Moments::of(&phi2s),
        ratio: Moments::of(&ratios),
        corr: correlation(&logs, &matched),
        out_of_domain: reps - paired.len(),
        theory: mom_theory(n, phi2, m, source)?,
    })
}

fn mom_cells(cfg: &ExperimentConfig, source: TheorySource) -> CliResult<Vec<MomCell>> {
    let exec = exec_for(cfg.threads);
    let mut cells = Vec::new();
    for &n in &cfg.ns {
        for &phi2 in &cfg.params {
            let seed = cell_seed(cfg.seed, n, phi2, cfg.estimator_set_id());
            cells.push(run_mom_cell(n, phi2, cfg.order_for(phi2), cfg.reps, seed, exec, source)?);
        }
    }
    Ok(cells)
}

pub fn table1_summary(cells: &[MomCell]) -> McSummary {
    let mut t = Table::new(
        "table1",
        &[
            "n", "phi2", "m", "reps", "mean_log_phi1", "se_log_phi1", "mean_phi2", "se_phi2", "sd_log_phi1_emp",
            "sd_log_phi1_th", "sd_phi2_emp", "sd_phi2_th", "corr_emp", "corr_th", "theory_kind", "out_of_domain",
        ],
    );
    let mut flags = Vec::new();
    for c in cells {
        let s = c.root_m_int;
        t.push(vec![
            c.n.into(),
            c.phi2.into(),
            c.m.into(),
            c.reps.into(),
            c.log_phi1.mean.into(),
            c.log_phi1.se.into(),
            c.phi2_hat.mean.into(),
            c.phi2_hat.se.into(),
            (s * c.log_phi1.sd).into(),
            c.theory.sd_log_phi1.into(),
            (s * c.phi2_hat.sd).into(),
            c.theory.sd_phi2.into(),
            c.corr.into(),
            c.theory.corr.into(),
            c.theory.kind.into(),
            c.out_of_domain.into(),
        ]);
        flags.extend(c.flags(true));
    }
    McSummary { tables: vec![t], flags }
}

pub fn table2_summary(cells: &[MomCell]) -> McSummary {
    let mut t = Table::new(
        "table2",
        &[
            "n", "phi2", "m", "reps", "mean_phi2", "bias", "se_phi2", "sd_phi2_emp", "sd_phi2_se", "sd_phi2_th",
            "ratio_emp", "ratio_se", "ratio_th", "ratio_taylor", "theory_kind", "out_of_domain",
        ],
    );
    let mut flags = Vec::new();
    for c in cells {
        let s = c.root_m_int;
        t.push(vec![
            c.n.into(),
            c.phi2.into(),
            c.m.into(),
            c.reps.into(),
            c.phi2_hat.mean.into(),
            (c.phi2_hat.mean - c.phi2).into(),
            c.phi2_hat.se.into(),
            (s * c.phi2_hat.sd).into(),
            (s * c.phi2_hat.sd_se()).into(),
            c.theory.sd_phi2.into(),
            c.ratio.mean.into(),
            c.ratio.se.into(),
            c.theory.ratio.into(),
            c.theory.ratio_taylor.into(),
            c.theory.kind.into(),
            c.out_of_domain.into(),
        ]);
        flags.extend(c.flags(false));
    }
    McSummary { tables: vec![t], flags }
}

/// One estimator's results in one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorCell {
    pub estimator: EstimatorKind,
    pub n: usize,
    pub phi2: f64,
    pub m: usize,
    pub reps: usize,
    pub phi2_hat: Moments,
    pub failures: usize,
    pub out_of_domain: usize,
    /// Profiled expected-Fisher SD at the truth (REML only).
    pub fisher_sd: Option<f64>,
}

/// All requested estimators on common field draws of one cell.
pub fn run_estimator_cell(
    n: usize,
    phi2: f64,
    m: usize,
    reps: usize,
    seed: u64,
    exec: Exec,
    estimators: &[EstimatorKind],
    domain: DomainKind,
) -> CliResult<Vec<EstimatorCell>> {
    let dom = match domain {
        DomainKind::Increasing => Domain::Increasing,
        DomainKind::Fixed => Domain::Fixed { n },
    };
    let sampler = anchored(n, phi2, dom)?;
    let samples: Vec<FieldSample> = exec.map(reps, |r| sampler.sample(seed, r as u64));
    let fields = || exec.map(reps, |r| samples[r].values());
    let l = n - 2 * m;
    let mut out = Vec::new();
    for &est in estimators {
        let mut fisher_sd = None;
        let results: Vec<Result<(f64, bool), twoscale::Error>> = match est {
            EstimatorKind::Bilinear => {
                let mode = if domain == DomainKind::Fixed { DomainMode::Fixed } else { DomainMode::Increasing };
                exec.map(reps, |r| {
                    let e = mom_estimate(&samples[r].qv(m, TrimMode::Common)?, mode)?;
                    Ok((e.phi2_hat, e.in_domain))
                })
            }
            EstimatorKind::Laplacian => {
                let xs = fields();
                exec.map(reps, |r| laplacian_estimate(&xs[r]).map(|e| (e.phi2_hat, e.in_domain)))
            }
            EstimatorKind::Whittle | EstimatorKind::WhittleCorrected => {
                let alias =
                    if est == EstimatorKind::Whittle { REFERENCE_WHITTLE_ALIAS } else { AliasSum::default() };
                let batch = WhittleBatch::with_alias(l, m, DEFAULT_MASK_TAU, alias)?;
                let xs = fields();
                exec.map(reps, |r| {
                    let e = batch.estimate(&likelihood_window(&xs[r], m)?)?;
                    Ok((e.phi2_hat, !e.at_boundary))
                })
            }
            EstimatorKind::Reml => {
                let prob = RemlProblem::new(l, m)?;
                fisher_sd = Some(prob.fisher(phi2)?.sd_profiled());
                let xs = fields();
                let ys = exec.try_map(reps, |r| likelihood_window(&xs[r], m))?;
                match prob.estimate_batch(&ys) {
                    Ok(v) => v.into_iter().map(|e| Ok((e.phi2_hat, !e.at_boundary))).collect(),
                    Err(e) => return Err(e.into()),
                }
            }
        };
        let ok: Vec<(f64, bool)> = results.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
        let values: Vec<f64> = ok.iter().map(|v| v.0).collect();
        out.push(EstimatorCell {
            estimator: est,
            n,
            phi2,
            m,
            reps,
            phi2_hat: Moments::of(&values),
            failures: reps - ok.len(),
            out_of_domain: ok.iter().filter(|v| !v.1).count(),
            fisher_sd,
        });
    }
    Ok(out)
}

pub fn estimator_summary(name: &str, cells: &[EstimatorCell]) -> McSummary {
    let mut t = Table::new(
        name,
        &["n", "phi2", "m", "estimator", "reps", "mean_phi2", "sd_phi2", "se_phi2", "failures", "out_of_domain", "fisher_sd_truth"],
    );
    let mut flags = Vec::new();
    for c in cells {
        t.push(vec![
            c.n.into(),
            c.phi2.into(),
            c.m.into(),
            c.estimator.as_str().into(),
            c.reps.into(),
            c.phi2_hat.mean.into(),
            c.phi2_hat.sd.into(),
            c.phi2_hat.se.into(),
            c.failures.into(),
            c.out_of_domain.into(),
            c.fisher_sd.unwrap_or(f64::NAN).into(),
        ]);
        flags.push(CellFlag {
            cell: format!("n={} phi2={} {}", c.n, c.phi2, c.estimator.as_str()),
            check: "failure_rate".into(),
            pass: c.failures as f64 <= MAX_FAILURE_RATE * c.reps as f64,
        });
    }
    McSummary { tables: vec![t], flags }
}

fn estimator_cells(cfg: &ExperimentConfig) -> CliResult<Vec<EstimatorCell>> {
    let exec = exec_for(cfg.threads);
    let mut cells = Vec::new();
    for &n in &cfg.ns {
        for &phi2 in &cfg.params {
            let seed = cell_seed(cfg.seed, n, phi2, cfg.estimator_set_id());
            cells.extend(run_estimator_cell(n, phi2, cfg.order_for(phi2), cfg.reps, seed, exec, &cfg.estimators, cfg.domain)?);
        }
    }
    Ok(cells)
}

/// Sample-versus-true variogram discrepancies.
#[derive(Clone, Debug, PartialEq)]
pub struct Fig1Data {
    pub lines: Table,
    pub slopes: Vec<f64>,
    pub mean_slope: Moments,
    pub true_gamma_h1: f64,
}

pub fn run_fig1(n: usize, phi2: f64, reps: usize, seed: u64, exec: Exec) -> CliResult<Fig1Data> {
    let pl = PowerLaw::new(1.0, phi2)?;
    let sampler = anchored(n, phi2, Domain::Increasing)?;
    let max_lag = n / 4;
    let gammas = exec.try_map(reps, |r| empirical_variogram(&sampler.sample(seed, r as u64).values(), max_lag))?;
    let log2n = (n as f64).log2();
    let mut lines = Table::new("fig1", &["replicate", "h", "log2_h_id", "log2_h_fd", "half_log2_ratio"]);
    let mut slopes = Vec::with_capacity(reps);
    let x: Vec<f64> = (1..=max_lag).map(|h| (h as f64).log2()).collect();
    for (r, g) in gammas.iter().enumerate() {
        let y: Vec<f64> = g
            .iter()
            .enumerate()
            .map(|(i, v)| 0.5 * (v / pl.semivariogram((i + 1) as f64).unwrap_or(f64::NAN)).log2())
            .collect();
        for (i, v) in y.iter().enumerate() {
            lines.push(vec![r.into(), (i + 1).into(), x[i].into(), (x[i] - log2n).into(), (*v).into()]);
        }
        slopes.push(ls_slope(&x, &y));
    }
    Ok(Fig1Data { lines, mean_slope: Moments::of(&slopes), slopes, true_gamma_h1: pl.semivariogram(1.0)? })
}

/// Fixed-domain scatter of `(log φ̂₁, φ̂₂)` with stabilized covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct Fig2Data {
    pub scatter: Table,
    pub corr_fd: f64,
    pub corr_fd_theory: f64,
    pub corr_id: f64,
    pub scaled_sd_phi2: f64,
    /// `M_int` times the empirical covariance of the `A_N`-stabilized vector.
    pub stabilized_cov: [[f64; 2]; 2],
    pub omega: [[f64; 2]; 2],
}

pub fn run_fig2(n: usize, phi2: f64, reps: usize, seed: u64, exec: Exec) -> CliResult<Fig2Data> {
    let m = 1;
    let sampler = anchored(n, phi2, Domain::Fixed { n })?;
    let n_sites = (n * n) as f64;
    let rows = exec.try_map(reps, |r| -> CliResult<[f64; 5]> {
        let s = sampler.sample(seed, r as u64);
        let fd = mom_estimate(&s.qv(m, TrimMode::Common)?, DomainMode::Fixed)?;
        let q = fd_transform(&fd, n_sites, Some((1.0, phi2)))?;
        let id_sample = FieldSample::new(s.raw().clone(), 1.0, SampleKind::Field, seed, r as u64);
        let id = mom_estimate(&id_sample.qv(m, TrimMode::Common)?, DomainMode::Increasing)?;
        let st = q.stabilized.unwrap_or([f64::NAN; 2]);
        Ok([q.log_phi1_plugin, fd.phi2_hat, st[0], st[1], id.log_phi1_hat.unwrap_or(f64::NAN)])
    })?;
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let mut scatter =
        Table::new("fig2", &["replicate", "log_phi1_fd", "phi2_hat", "stabilized_1", "stabilized_2", "log_phi1_id"]);
    for (r, v) in rows.iter().enumerate() {
        scatter.push(std::iter::once(r.into()).chain(v.iter().map(|x| (*x).into())).collect());
    }
    let m_int = ((n - 2 * m) * (n - 2 * m)) as f64;
    let c = cov2(&col(2), &col(3));
    let theory = mom_theory(n, phi2, m, TheorySource::FiniteLattice)?;
    Ok(Fig2Data {
        corr_fd: correlation(&col(0), &col(1)),
        corr_fd_theory: fd_predictions(theory.omega, n_sites).corr_unstabilized,
        corr_id: correlation(&col(4), &col(1)),
        scaled_sd_phi2: m_int.sqrt() * col(1).std_dev(),
        stabilized_cov: [[m_int * c[0][0], m_int * c[0][1]], [m_int * c[1][0], m_int * c[1][1]]],
        omega: theory.omega,
        scatter,
    })
}

/// Key/value table of scalar results.
pub fn scalar_table(name: &str, rows: &[(&str, Value)]) -> Table {
    let mut t = Table::new(name, &["quantity", "value"]);
    for (k, v) in rows {
        t.push(vec![(*k).into(), v.clone()]);
    }
    t
}

fn robust_summary(cfg: &ExperimentConfig, exec: Exec) -> CliResult<McSummary> {
    let mut s = McSummary::default();
    match cfg.experiment {
        ExperimentKind::Thinning => {
            let mut t = Table::new(
                "thinning",
                &["n", "phi2", "a", "retention", "mean_deleted", "mean_abs_dphi2", "sd_phi2", "sqrtN_abs_dq1", "sqrtN_abs_dq2"],
            );
            for &phi2 in &cfg.params {
                let tc = ThinningConfig { ns: cfg.ns.clone(), phi2, a: cfg.thin_a, reps: cfg.reps, seed: cfg.seed, exec };
                for c in thinning_experiment(&tc)? {
                    t.push(vec![
                        c.n.into(),
                        phi2.into(),
                        cfg.thin_a.into(),
                        c.retention.into(),
                        c.mean_k.into(),
                        c.mean_abs_dphi2.into(),
                        c.sd_phi2.into(),
                        c.scaled_dq1.into(),
                        c.scaled_dq2.into(),
                    ]);
                    s.flags.push(CellFlag {
                        cell: format!("n={} phi2={phi2}", c.n),
                        check: "mean_abs_dphi2 < sd/2".into(),
                        pass: c.mean_abs_dphi2 < 0.5 * c.sd_phi2,
                    });
                }
            }
            s.tables.push(t);
        }
        ExperimentKind::Jitter => {
            let mut t = Table::new(
                "jitter",
                &["n", "phi2", "m", "c", "mean_abs_dq1", "mean_abs_dq2", "mean_phi2_clean", "mean_phi2_jittered", "sd_phi2_clean", "sd_phi2_jittered"],
            );
            for &phi2 in &cfg.params {
                let m = cfg.order_for(phi2);
                let jc = JitterConfig {
                    ns: cfg.ns.clone(),
                    truth: JitterTruth::PinnedPowerLaw { phi2 },
                    m,
                    c: cfg.jitter_c,
                    reps: cfg.reps,
                    seed: cfg.seed,
                    exec,
                };
                for c in jitter_experiment(&jc)? {
                    t.push(vec![
                        c.n.into(),
                        phi2.into(),
                        m.into(),
                        cfg.jitter_c.into(),
                        c.mean_abs_dq1.into(),
                        c.mean_abs_dq2.into(),
                        c.mean_phi2_clean.into(),
                        c.mean_phi2_jittered.into(),
                        c.sd_phi2_clean.into(),
                        c.sd_phi2_jittered.into(),
                    ]);
                }
            }
            s.tables.push(t);
        }
        ExperimentKind::Matern => {
            let mut t = Table::new(
                "matern",
                &["n", "nu", "m", "mean_phi2", "se_phi2", "scaled_sd_phi2", "predicted_scaled_sd", "mean_scale_limit", "kappa_nu", "domination_points", "domination_violations", "domination_max_ratio"],
            );
            for &nu in &cfg.params {
                let m = cfg.order_for(nu);
                let mc = MisspecConfig {
                    sigma2: cfg.matern_sigma2,
                    nu,
                    rho: cfg.matern_rho,
                    m,
                    ns: cfg.ns.clone(),
                    reps: cfg.reps,
                    seed: cfg.seed,
                    grid: 101,
                    exec,
                };
                for c in misspecification_experiment(&mc)? {
                    t.push(vec![
                        c.n.into(),
                        nu.into(),
                        m.into(),
                        c.mean_phi2.into(),
                        c.se_phi2.into(),
                        c.scaled_sd_phi2.into(),
                        c.predicted_scaled_sd.into(),
                        c.mean_scale_limit.into(),
                        c.kappa_nu.into(),
                        c.domination.points.into(),
                        c.domination.violations.into(),
                        c.domination.max_ratio.into(),
                    ]);
                    s.flags.push(CellFlag {
                        cell: format!("n={} nu={nu}", c.n),
                        check: "spectral domination".into(),
                        pass: c.domination.all_pass(),
                    });
                }
            }
            s.tables.push(t);
        }
        ExperimentKind::Deletion => {
            let mut t = Table::new("deletion", &["n", "k", "mean_fro", "mean_spectral", "max_rank", "c_hat"]);
            for c in deletion_scaling(&cfg.ns, &cfg.deletions, cfg.masks, 1, cfg.seed, exec)? {
                t.push(vec![c.n.into(), c.k.into(), c.mean_fro.into(), c.mean_spectral.into(), c.max_rank.into(), c.c_hat.into()]);
                s.flags.push(CellFlag {
                    cell: format!("n={} k={}", c.n, c.k),
                    check: "rank <= 16k".into(),
                    pass: c.max_rank <= 16 * c.k,
                });
            }
            s.tables.push(t);
        }
        _ => unreachable!("not a robustness experiment"),
    }
    Ok(s)
}

/// Runs a validated experiment inside a pool of `cfg.threads` workers.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<McSummary> {
    cfg.validate()?;
    exec::with_threads(cfg.threads, || run_inner(cfg))
}

fn run_inner(cfg: &ExperimentConfig) -> CliResult<McSummary> {
    let ex = exec_for(cfg.threads);
    match cfg.experiment {
        ExperimentKind::Table1 => Ok(table1_summary(&mom_cells(cfg, TheorySource::FiniteLattice)?)),
        ExperimentKind::Table2 => Ok(table2_summary(&mom_cells(cfg, TheorySource::Torus)?)),
        ExperimentKind::Table3 => Ok(estimator_summary("table3", &estimator_cells(cfg)?)),
        ExperimentKind::Custom => Ok(estimator_summary("custom", &estimator_cells(cfg)?)),
        ExperimentKind::Fig1 => {
            let mut s = McSummary::default();
            let mut summary = Table::new("fig1_summary", &["n", "phi2", "reps", "mean_slope", "se_slope", "true_gamma_h1"]);
            let mut lines: Option<Table> = None;
            for &n in &cfg.ns {
                for &phi2 in &cfg.params {
                    let d = run_fig1(n, phi2, cfg.reps, cell_seed(cfg.seed, n, phi2, cfg.estimator_set_id()), ex)?;
                    summary.push(vec![
                        n.into(),
                        phi2.into(),
                        cfg.reps.into(),
                        d.mean_slope.mean.into(),
                        d.mean_slope.se.into(),
                        d.true_gamma_h1.into(),
                    ]);
                    s.flags.push(CellFlag {
                        cell: format!("n={n} phi2={phi2}"),
                        check: "mean slope within 3 SE of 0".into(),
                        pass: within(d.mean_slope.mean, 0.0, d.mean_slope.se, 3.0),
                    });
                    let mut l = d.lines;
                    l.columns.splice(0..0, ["n".to_string(), "phi2".to_string()]);
                    for row in &mut l.rows {
                        row.splice(0..0, [n.into(), phi2.into()]);
                    }
                    match &mut lines {
                        Some(t) => t.rows.extend(l.rows),
                        None => lines = Some(l),
                    }
                }
            }
            s.tables.extend(lines);
            s.tables.push(summary);
            Ok(s)
        }
        ExperimentKind::Fig2 => {
            let mut s = McSummary::default();
            let mut summary = Table::new(
                "fig2_summary",
                &["n", "phi2", "reps", "corr_fd", "corr_fd_th", "corr_id", "scaled_sd_phi2", "stab_11", "omega_11", "stab_12", "omega_12", "stab_22", "omega_22"],
            );
            let mut scatter: Option<Table> = None;
            for &n in &cfg.ns {
                for &phi2 in &cfg.params {
                    let d = run_fig2(n, phi2, cfg.reps, cell_seed(cfg.seed, n, phi2, cfg.estimator_set_id()), ex)?;
                    summary.push(vec![
                        n.into(),
                        phi2.into(),
                        cfg.reps.into(),
                        d.corr_fd.into(),
                        d.corr_fd_theory.into(),
                        d.corr_id.into(),
                        d.scaled_sd_phi2.into(),
                        d.stabilized_cov[0][0].into(),
                        d.omega[0][0].into(),
                        d.stabilized_cov[0][1].into(),
                        d.omega[0][1].into(),
                        d.stabilized_cov[1][1].into(),
                        d.omega[1][1].into(),
                    ]);
                    let mut l = d.scatter;
                    l.columns.splice(0..0, ["n".to_string(), "phi2".to_string()]);
                    for row in &mut l.rows {
                        row.splice(0..0, [n.into(), phi2.into()]);
                    }
                    match &mut scatter {
                        Some(t) => t.rows.extend(l.rows),
                        None => scatter = Some(l),
                    }
                }
            }
            s.tables.extend(scatter);
            s.tables.push(summary);
            Ok(s)
        }
        ExperimentKind::Thinning | ExperimentKind::Jitter | ExperimentKind::Matern | ExperimentKind::Deletion => {
            robust_summary(cfg, ex)
        }
    }
}

/// Field on `Λ_n` for the `simulate` subcommand.
pub fn simulate_field(n: usize, phi2: f64, domain: DomainKind, seed: u64, replicate: u64) -> CliResult<FieldSample> {
    let dom = match domain {
        DomainKind::Increasing => Domain::Increasing,
        DomainKind::Fixed => Domain::Fixed { n },
    };
    Ok(anchored(n, phi2, dom)?.sample(seed, replicate))
}
