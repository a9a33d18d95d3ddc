//! Flat `key=value` experiment configuration with repeated keys for lists.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Seed used when neither the file nor the command line sets one.
pub const DEFAULT_SEED: u64 = 20_240_601;

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl FromStr for $name {
            type Err = CliError;
            fn from_str(s: &str) -> CliResult<Self> {
                match s.trim() {
                    $($text => Ok($name::$variant),)+
                    other => Err(CliError::Config(format!(
                        "unknown {} '{other}'", stringify!($name)
                    ))),
                }
            }
        }
    };
}

keyword_enum!(ExperimentKind {
    Table1 => "table1",
    Table2 => "table2",
    Table3 => "table3",
    Fig1 => "fig1",
    Fig2 => "fig2",
    Thinning => "thinning",
    Jitter => "jitter",
    Matern => "matern",
    Deletion => "deletion",
    Custom => "custom",
});

keyword_enum!(EstimatorKind {
    Bilinear => "bilinear",
    Laplacian => "laplacian",
    Whittle => "whittle",
    WhittleCorrected => "whittle-corrected",
    Reml => "reml",
});

keyword_enum!(Format {
    Csv => "csv",
    Txt => "txt",
});

keyword_enum!(DomainKind {
    Increasing => "id",
    Fixed => "fd",
});

/// One experiment: design grid, Monte Carlo budget and output settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Lattice sides.
    pub ns: Vec<usize>,
    /// `φ₂` values, or `ν` for the Matérn study.
    pub params: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    pub out: PathBuf,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
    pub format: Format,
    /// Filter order; 0 picks `⌊φ₂⌋ + 1`.
    pub m: usize,
    pub domain: DomainKind,
    /// Thinning exponent in `p = 1 − N^{−a}`.
    pub thin_a: f64,
    /// Jitter bound `c` in `‖ε‖∞ ≤ c/n`.
    pub jitter_c: f64,
    pub matern_sigma2: f64,
    pub matern_rho: f64,
    /// Deletion counts for the deletion study.
    pub deletions: Vec<usize>,
    /// Random masks per deletion cell.
    pub masks: usize,
}

impl ExperimentConfig {
    /// Default design of each experiment.
    pub fn preset(experiment: ExperimentKind) -> Self {
        use EstimatorKind::*;
        use ExperimentKind::*;
        let (ns, params, reps, estimators): (Vec<usize>, Vec<f64>, usize, Vec<EstimatorKind>) = match experiment {
            Table1 => (vec![30, 40, 50, 60], vec![0.5, 0.8], 400, vec![Bilinear]),
            Table2 => (vec![30, 35, 40, 45, 50, 60], vec![1.2, 1.5, 1.8], 400, vec![Bilinear]),
            Table3 => (vec![50], vec![0.2, 0.4, 0.6, 0.8], 400, vec![Bilinear, Laplacian, Whittle, WhittleCorrected, Reml]),
            Fig1 => (vec![60], vec![0.8], 25, vec![Bilinear]),
            Fig2 => (vec![60], vec![0.5], 400, vec![Bilinear]),
            Thinning => (vec![24, 40, 60], vec![0.5], 200, vec![Bilinear]),
            Jitter => (vec![16, 32], vec![1.5], 100, vec![Bilinear]),
            Matern => (vec![60], vec![0.5], 400, vec![Bilinear]),
            Deletion => (vec![16, 24, 32], vec![0.5], 1, vec![Bilinear]),
            Custom => (vec![30], vec![0.5], 100, vec![Bilinear]),
        };
        Self {
            experiment,
            ns,
            params,
            reps,
            seed: DEFAULT_SEED,
            estimators,
            out: PathBuf::from("out"),
            threads: 0,
            format: Format::Txt,
            m: if experiment == Jitter { 2 } else { 0 },
            domain: if experiment == Fig2 { DomainKind::Fixed } else { DomainKind::Increasing },
            thin_a: 0.75,
            jitter_c: 0.4,
            matern_sigma2: 1.0,
            matern_rho: 1.0,
            deletions: vec![1, 4, 16],
            masks: 10,
        }
    }

    /// Parses a configuration file. The `experiment` key selects the preset
    /// that the remaining keys override; list keys replace the preset list.
    pub fn parse(text: &str) -> CliResult<Self> {
        let pairs = parse_pairs(text)?;
        let kind = pairs
            .iter()
            .rev()
            .find(|(k, _)| k == "experiment")
            .map(|(_, v)| v.parse())
            .transpose()?
            .unwrap_or(ExperimentKind::Custom);
        let mut cfg = Self::preset(kind);
        cfg.apply(&pairs)?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides in order.
    pub fn apply(&mut self, pairs: &[(String, String)]) -> CliResult<()> {
        let present = |name: &str| pairs.iter().any(|(k, _)| k == name);
        if present("n") {
            self.ns.clear();
        }
        if present("param") {
            self.params.clear();
        }
        if present("estimator") {
            self.estimators.clear();
        }
        if present("k") {
            self.deletions.clear();
        }
        for (key, value) in pairs {
            match key.as_str() {
                "experiment" => self.experiment = value.parse()?,
                "n" => self.ns.push(num(key, value)?),
                "param" => self.params.push(num(key, value)?),
                "estimator" => self.estimators.push(value.parse()?),
                "k" => self.deletions.push(num(key, value)?),
                "reps" => self.reps = num(key, value)?,
                "seed" => self.seed = num(key, value)?,
                "out" => self.out = PathBuf::from(value),
                "threads" => self.threads = num(key, value)?,
                "format" => self.format = value.parse()?,
                "m" => self.m = num(key, value)?,
                "domain" => self.domain = value.parse()?,
                "a" => self.thin_a = num(key, value)?,
                "c" => self.jitter_c = num(key, value)?,
                "sigma2" => self.matern_sigma2 = num(key, value)?,
                "rho" => self.matern_rho = num(key, value)?,
                "masks" => self.masks = num(key, value)?,
                other => return Err(CliError::Config(format!("unknown key '{other}'"))),
            }
        }
        Ok(())
    }

    /// Serializes every field; `parse` restores an equal value.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("experiment", &self.experiment.as_str());
        for n in &self.ns {
            kv("n", n);
        }
        for p in &self.params {
            kv("param", p);
        }
        kv("reps", &self.reps);
        kv("seed", &self.seed);
        for e in &self.estimators {
            kv("estimator", &e.as_str());
        }
        kv("out", &self.out.display());
        kv("threads", &self.threads);
        kv("format", &self.format.as_str());
        kv("m", &self.m);
        kv("domain", &self.domain.as_str());
        kv("a", &self.thin_a);
        kv("c", &self.jitter_c);
        kv("sigma2", &self.matern_sigma2);
        kv("rho", &self.matern_rho);
        for k in &self.deletions {
            kv("k", k);
        }
        kv("masks", &self.masks);
        s
    }

    /// Filter order for `φ₂`.
    pub fn order_for(&self, phi2: f64) -> usize {
        if self.m > 0 {
            self.m
        } else {
            phi2.floor() as usize + 1
        }
    }

    /// Checks the design against each experiment's parameter domain.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.ns.is_empty() || self.params.is_empty() {
            return bad("at least one n and one param are required".into());
        }
        use ExperimentKind::*;
        for &p in &self.params {
            let ok = match self.experiment {
                Table1 | Table3 | Fig1 | Fig2 | Thinning => p > 0.0 && p < 1.0,
                Table2 => p > 1.0 && p < 2.0,
                Jitter => p > 0.0 && p < 2.0 && p.fract() != 0.0,
                Matern => p > 0.0 && p < 2.0,
                Deletion => true,
                Custom => p > 0.0 && p < 2.0 && p.fract() != 0.0 && (self.m == 0 || p < self.m as f64),
            };
            if !ok {
                return bad(format!("param {p} outside the domain of {}", self.experiment.as_str()));
            }
        }
        let min_n = 2 * self.params.iter().map(|&p| self.order_for(p)).max().unwrap_or(1) + 3;
        if let Some(&n) = self.ns.iter().find(|&&n| n < min_n) {
            return bad(format!("lattice side {n} below the minimum {min_n}"));
        }
        if self.experiment == Deletion && (self.deletions.is_empty() || self.masks == 0) {
            return bad("deletion study needs k values and masks >= 1".into());
        }
        if !(0.0..0.5).contains(&self.jitter_c) {
            return bad(format!("jitter bound {} outside [0, 1/2)", self.jitter_c));
        }
        if self.estimators.is_empty() {
            return bad("at least one estimator is required".into());
        }
        Ok(())
    }

    /// Identifier of the estimator set, used in seed derivation.
    pub fn estimator_set_id(&self) -> u64 {
        self.estimators.iter().fold(0, |acc, e| {
            acc | 1 << EstimatorKind::ALL.iter().position(|x| x == e).unwrap_or(0)
        })
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> CliResult<T> {
    value.trim().parse().map_err(|_| CliError::Config(format!("bad value '{value}' for key '{key}'")))
}

/// Splits a configuration text into ordered `(key, value)` pairs. Blank
/// lines and lines starting with `#` are ignored.
pub fn parse_pairs(text: &str) -> CliResult<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .filter(|(k, _)| !k.is_empty())
                .ok_or_else(|| CliError::Config(format!("line {}: expected key=value, got '{l}'", i + 1)))
        })
        .collect()
}
