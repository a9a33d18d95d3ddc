use crate::error::{invalid, Error, Result};
use crate::filter::{qv_from_filtered, quadratic_variations, QvStats, TrimMode};
use crate::gcmodel::{CovModel, Domain, LatticeModel, Matern, PowerLaw};
use crate::grid::Grid;
use crate::linalg::{sym_eigenvalues, Cholesky, Matrix};

use super::{draw, sym_matrix, LagTable};

/// Largest number of filtered sites simulated jointly.
pub const FILTERED_SITE_CAP: usize = 4096;

/// A covariance model together with the sampling domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSpec {
    pub model: CovModel,
    pub domain: Domain,
}

impl ModelSpec {
    pub fn power_law(phi1: f64, phi2: f64) -> Result<Self> {
        Ok(Self { model: CovModel::PowerLaw(PowerLaw::new(phi1, phi2)?), domain: Domain::Increasing })
    }

    pub fn matern(sigma2: f64, nu: f64, rho: f64, domain: Domain) -> Result<Self> {
        Ok(Self { model: CovModel::Matern(Matern::new(sigma2, nu, rho)?), domain })
    }

    pub fn with_domain(self, domain: Domain) -> Self {
        Self { domain, ..self }
    }

    /// Covariance of the observed lattice values.
    pub fn lattice_model(&self) -> LatticeModel {
        LatticeModel::new(self.model, self.domain)
    }

    /// Kernel to simulate with and the amplitude that maps its draws to the
    /// observed field. Fixed-domain power laws are unit-lattice draws scaled by
    /// `n^{−φ₂}`, which is exact by self-similarity.
    pub fn simulation_kernel(&self) -> (LatticeModel, f64) {
        match (self.model, self.domain) {
            (CovModel::PowerLaw(p), Domain::Fixed { n }) => {
                (LatticeModel::unit(self.model), (n as f64).powf(-p.phi2()))
            }
            _ => (self.lattice_model(), 1.0),
        }
    }
}

/// What a sample's grid holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleKind {
    /// Field values on `Λ_n`.
    Field,
    /// The step-one order-`m` filtered field on `Λ_{n−m}`.
    Filtered { m: usize },
}

/// A simulated grid with a multiplicative amplitude kept separate from the
/// stored values.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    values: Grid,
    amplitude: f64,
    pub kind: SampleKind,
    pub seed: u64,
    pub replicate: u64,
}

impl FieldSample {
    pub fn new(values: Grid, amplitude: f64, kind: SampleKind, seed: u64, replicate: u64) -> Self {
        Self { values, amplitude, kind, seed, replicate }
    }

    /// Stored values before the amplitude is applied.
    pub fn raw(&self) -> &Grid {
        &self.values
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Values with the amplitude applied.
    pub fn values(&self) -> Grid {
        if self.amplitude == 1.0 {
            self.values.clone()
        } else {
            self.values.scaled(self.amplitude)
        }
    }

    /// Same draw multiplied by `s`.
    pub fn rescaled(&self, s: f64) -> Self {
        Self { amplitude: self.amplitude * s, ..self.clone() }
    }

    /// Quadratic variations of order `m`, carrying the amplitude exactly.
    pub fn qv(&self, m: usize, trim: TrimMode) -> Result<QvStats> {
        let q = match self.kind {
            SampleKind::Field => quadratic_variations(&self.values, m, trim)?,
            SampleKind::Filtered { m: mf } if mf == m => qv_from_filtered(&self.values, m, trim)?,
            SampleKind::Filtered { m: mf } => {
                return Err(invalid(format!("sample filtered at order {mf}, requested {m}")))
            }
        };
        Ok(q.with_amplitude(self.amplitude))
    }
}

/// Exact sampler of the stationary field `D^(m)_[1] X` on `Λ_{n−m}`.
#[derive(Clone, Debug)]
pub struct FilteredSampler {
    n: usize,
    m: usize,
    amplitude: f64,
    chol: Cholesky,
}

/// Factors a covariance, reporting the smallest eigenvalue on failure.
pub(crate) fn factor_or_diagnose(a: &Matrix<f64>) -> Result<Cholesky> {
    Cholesky::factor(a).map_err(|e| match e {
        Error::NotPositiveDefinite { pivot } => {
            let min = sym_eigenvalues(a).ok().and_then(|v| v.first().copied()).unwrap_or(f64::NAN);
            Error::Numeric(format!(
                "covariance not positive definite at pivot {pivot}; smallest eigenvalue {min:e}"
            ))
        }
        other => other,
    })
}

impl FilteredSampler {
    pub fn new(n: usize, m: usize, spec: &ModelSpec) -> Result<Self> {
        let (model, amplitude) = spec.simulation_kernel();
        model.check_order(m)?;
        if n <= 2 * m {
            return Err(Error::LatticeTooSmall { n, min: 2 * m + 1 });
        }
        let side = n - m;
        let k = side * side;
        if k > FILTERED_SITE_CAP {
            return Err(invalid(format!("{k} filtered sites exceed the cap {FILTERED_SITE_CAP}")));
        }
        let table = LagTable::new(&model, m, side)?;
        let cov = sym_matrix(k, |i, j| {
            let (a1, a2) = ((i / side) as i64, (i % side) as i64);
            let (b1, b2) = ((j / side) as i64, (j % side) as i64);
            table.get(a1 - b1, a2 - b2)
        });
        Ok(Self { n, m, amplitude, chol: factor_or_diagnose(&cov)? })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// Diagonal loading that the factorization needed.
    pub fn jitter(&self) -> f64 {
        self.chol.jitter()
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> FieldSample {
        let side = self.n - self.m;
        let y = draw(&self.chol, seed, replicate);
        FieldSample::new(
            Grid::new(side, y).expect("sampler dimension"),
            self.amplitude,
            SampleKind::Filtered { m: self.m },
            seed,
            replicate,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldsim::filtered_cov;

    #[test]
    fn moments_match_filtered_cov() {
        let spec = ModelSpec::power_law(1.0, 0.5).unwrap();
        let s = FilteredSampler::new(20, 1, &spec).unwrap();
        let r = 400;
        let (mut m0, mut m1) = (Vec::new(), Vec::new());
        for i in 0..r {
            let y = s.sample(42, i).raw().clone();
            m0.push(y.get(5, 5).powi(2));
            m1.push(y.get(5, 5) * y.get(6, 5));
        }
        let check = |v: &[f64], want: f64| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
            assert!((mean - want).abs() < 3.0 * sd / (v.len() as f64).sqrt(), "{mean} vs {want}");
        };
        let model = spec.lattice_model();
        check(&m0, filtered_cov([0, 0], 1, 1, &model).unwrap());
        check(&m1, filtered_cov([1, 0], 1, 1, &model).unwrap());
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = ModelSpec::power_law(1.0, 1.3).unwrap();
        let s = FilteredSampler::new(12, 2, &spec).unwrap();
        assert_eq!(s.sample(9, 3), s.sample(9, 3));
        assert_ne!(s.sample(9, 3).raw(), s.sample(9, 4).raw());
    }

    #[test]
    fn fixed_domain_power_law_is_rescaled_unit_draw() {
        let id = ModelSpec::power_law(1.0, 0.5).unwrap();
        let fd = id.with_domain(Domain::Fixed { n: 16 });
        let a = FilteredSampler::new(16, 1, &id).unwrap().sample(1, 0);
        let b = FilteredSampler::new(16, 1, &fd).unwrap().sample(1, 0);
        assert_eq!(a.raw(), b.raw());
        assert_eq!(b.amplitude(), 0.25);
    }
}
