use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twoscale::asymptotics::{asymptotic_sigma, estimator_cov, EstimatorScale, QuadSpec};
use twoscale::estimate::{
    laplacian_estimate, mom_estimate, reml_estimate, whittle_estimate, DomainMode, DEFAULT_MASK_TAU,
};
use twoscale::fieldsim::{read_csv, read_rsf1, write_csv, write_rsf1, DumpHeader, SimMode};
use twoscale::filter::quadratic_variations;
use twoscale::filter::TrimMode;
use twoscale::gcmodel::{CovModel, LatticeModel, PowerLaw};
use twoscale::Grid;
use twoscale_cli::config::{DomainKind, EstimatorKind, ExperimentConfig, ExperimentKind, Format};
use twoscale_cli::harness::{mom_theory, run_experiment, scalar_table, simulate_field, TheorySource};
use twoscale_cli::report::{Table, Value};
use twoscale_cli::verify::{run_criterion, VerifyOptions, CRITERIA};
use twoscale_cli::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "twoscale", version, about = "Two-scale quadratic-variation estimation for lattice random fields")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// key=value configuration file; flags override its entries.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads (0 uses all cores, 1 runs sequentially).
    #[arg(long, global = true, value_name = "INT")]
    threads: Option<usize>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["csv", "txt"])]
    format: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one anchored power-law field and dump it as RSF1 and CSV.
    Simulate {
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
    /// Estimate the roughness and scale of a dumped field.
    Estimate {
        /// RSF1 (`.rsf1`/`.bin`) or `t1,t2,value` CSV input.
        input: PathBuf,
    },
    /// Print finite-lattice, torus and limiting delta-method predictions.
    Theory,
    /// Run a Monte Carlo experiment and write its tables.
    Experiment {
        /// Experiment name; overrides the configuration file.
        name: Option<String>,
    },
    /// Run acceptance criteria; exits with 4 if any fails.
    Verify {
        /// Criteria to run (default: all).
        #[arg(long = "criterion", value_name = "ID")]
        criteria: Vec<u8>,
    },
}

fn load_config(g: &GlobalArgs, experiment: Option<&str>) -> CliResult<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::preset(ExperimentKind::Custom),
    };
    if let Some(name) = experiment {
        let kind: ExperimentKind = name.parse()?;
        if kind != cfg.experiment {
            let pairs = match &g.config {
                Some(p) => twoscale_cli::config::parse_pairs(&fs::read_to_string(p)?)?,
                None => Vec::new(),
            };
            cfg = ExperimentConfig::preset(kind);
            cfg.apply(&pairs.into_iter().filter(|(k, _)| k != "experiment").collect::<Vec<_>>())?;
        }
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(t) = g.threads {
        cfg.threads = t;
    }
    if let Some(o) = &g.out {
        cfg.out = o.clone();
    }
    if let Some(f) = &g.format {
        cfg.format = f.parse()?;
    }
    Ok(cfg)
}

fn print_tables(tables: &[Table], format: Format) -> CliResult<()> {
    for t in tables {
        println!("{}", t.render(format)?);
    }
    Ok(())
}

fn simulate(cfg: &ExperimentConfig, replicate: u64) -> CliResult<()> {
    let (n, phi2) = (cfg.ns[0], cfg.params[0]);
    if !(phi2 > 0.0 && phi2 < 2.0 && phi2.fract() != 0.0) {
        return Err(CliError::Config(format!("param {phi2} must lie in (0, 2) and not be an integer")));
    }
    let field = simulate_field(n, phi2, cfg.domain, cfg.seed, replicate)?.values();
    fs::create_dir_all(&cfg.out)?;
    let stem = format!("field_n{n}_phi{phi2}_r{replicate}");
    let header = DumpHeader { n: n as u64, m: cfg.order_for(phi2) as u64, mode: SimMode::Anchored, seed: cfg.seed };
    let rsf = cfg.out.join(format!("{stem}.rsf1"));
    write_rsf1(BufWriter::new(File::create(&rsf)?), &header, &field)?;
    let csv = cfg.out.join(format!("{stem}.csv"));
    write_csv(BufWriter::new(File::create(&csv)?), &field)?;
    println!("{}\n{}", rsf.display(), csv.display());
    Ok(())
}

fn read_field(path: &Path) -> CliResult<Grid> {
    let mut f = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    let is_rsf = f.get_mut().read_exact(&mut magic).is_ok() && &magic == b"RSF1";
    let f = BufReader::new(File::open(path)?);
    let g = if is_rsf { read_rsf1(f)?.1 } else { read_csv(f)? };
    Ok(g)
}

fn estimate(cfg: &ExperimentConfig, input: &Path) -> CliResult<()> {
    let x = read_field(input)?;
    let mut t = Table::new("estimates", &["estimator", "m", "phi2_hat", "phi1_hat", "in_domain"]);
    for &e in &cfg.estimators {
        let m = if cfg.m > 0 { cfg.m } else { 1 };
        let (phi2, phi1, ok) = match e {
            EstimatorKind::Bilinear => {
                let mode = if cfg.domain == DomainKind::Fixed { DomainMode::Fixed } else { DomainMode::Increasing };
                let r = mom_estimate(&quadratic_variations(&x, m, TrimMode::Common)?, mode)?;
                (r.phi2_hat, r.phi1_hat.unwrap_or(f64::NAN), r.in_domain)
            }
            EstimatorKind::Laplacian => {
                let r = laplacian_estimate(&x)?;
                (r.phi2_hat, r.phi1_hat.unwrap_or(f64::NAN), r.in_domain)
            }
            EstimatorKind::Whittle | EstimatorKind::WhittleCorrected => {
                let r = whittle_estimate(&x, m, DEFAULT_MASK_TAU)?;
                (r.phi2_hat, r.phi1_hat, !r.at_boundary)
            }
            EstimatorKind::Reml => {
                let r = reml_estimate(&x, m)?;
                (r.phi2_hat, r.phi1_hat, !r.at_boundary)
            }
        };
        t.push(vec![e.as_str().into(), m.into(), phi2.into(), phi1.into(), ok.into()]);
    }
    print_tables(&[t], cfg.format)
}

fn theory(cfg: &ExperimentConfig) -> CliResult<()> {
    let mut t = Table::new(
        "theory",
        &["n", "phi2", "m", "kind", "sd_log_phi1", "sd_phi2", "corr", "ratio", "ratio_taylor"],
    );
    let mut limits = Vec::new();
    for &phi2 in &cfg.params {
        let m = cfg.order_for(phi2);
        for &n in &cfg.ns {
            for source in [TheorySource::FiniteLattice, TheorySource::Torus] {
                let th = mom_theory(n, phi2, m, source)?;
                t.push(vec![
                    n.into(),
                    phi2.into(),
                    m.into(),
                    th.kind.into(),
                    th.sd_log_phi1.into(),
                    th.sd_phi2.into(),
                    th.corr.into(),
                    th.ratio.into(),
                    th.ratio_taylor.into(),
                ]);
            }
        }
        let model = LatticeModel::unit(CovModel::PowerLaw(PowerLaw::new(1.0, phi2)?));
        let e = estimator_cov(&asymptotic_sigma(m, &model, QuadSpec::default())?, EstimatorScale::LogPhi1)?;
        limits.push(scalar_table(
            &format!("asymptotic_phi2_{phi2}"),
            &[
                ("kind", Value::from("asymptotic")),
                ("m", m.into()),
                ("sd_log_phi1", e.sd1.into()),
                ("sd_phi2", e.sd2.into()),
                ("corr", e.corr.into()),
            ],
        ));
    }
    let mut all = vec![t];
    all.extend(limits);
    print_tables(&all, cfg.format)
}

fn experiment(cfg: &ExperimentConfig) -> CliResult<()> {
    let summary = run_experiment(cfg)?;
    let files = summary.write(&cfg.out)?;
    fs::write(cfg.out.join("config.txt"), cfg.to_text())?;
    print_tables(&summary.tables, cfg.format)?;
    let failed = summary.flags.iter().filter(|f| !f.pass).count();
    eprintln!("wrote {} files to {}; {failed} cell flags failed", files.len() + 1, cfg.out.display());
    Ok(())
}

fn verify(cfg: &ExperimentConfig, ids: &[u8]) -> CliResult<()> {
    let ids: Vec<u8> = if ids.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { ids.to_vec() };
    let opts = VerifyOptions { seed: cfg.seed, threads: cfg.threads };
    let mut failed = Vec::new();
    for id in ids {
        let c = run_criterion(id, &opts)?;
        println!("{c}");
        if !c.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(format!("criteria {failed:?} failed")))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { replicate } => simulate(&load_config(&cli.global, None)?, replicate),
        Command::Estimate { input } => estimate(&load_config(&cli.global, None)?, &input),
        Command::Theory => theory(&load_config(&cli.global, None)?),
        Command::Experiment { name } => experiment(&load_config(&cli.global, name.as_deref())?),
        Command::Verify { criteria } => verify(&load_config(&cli.global, None)?, &criteria),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
