//! Exact Gaussian simulation of filtered, anchored, Matérn and jittered fields.

mod anchored;
mod io;
mod jitter;
mod kernel;
mod matern;
mod sampler;

pub use anchored::{anchored_cov, AnchorSet, AnchoredSampler, ANCHORED_SIDE_CAP};
pub use io::{read_csv, read_rsf1, write_csv, write_rsf1, DumpHeader, SimMode};
pub use jitter::{JitterModel, JitterPair, JitterSampler};
pub use kernel::{filtered_cov, LagTable};
pub use matern::{MaternSampler, MATERN_SITE_CAP};
pub use sampler::{FieldSample, FilteredSampler, ModelSpec, SampleKind, FILTERED_SITE_CAP};

use crate::linalg::{Cholesky, Matrix};
use crate::rng::{normals, replicate_rng, Purpose};

/// Draws `L z` for the Gaussian stream of replicate `r`.
pub(crate) fn draw(chol: &Cholesky, seed: u64, r: u64) -> Vec<f64> {
    let z = normals(&mut replicate_rng(seed, Purpose::Gaussian, r), chol.dim());
    chol.lower_mul(&z)
}

/// Dense symmetric matrix from an entry function on the lower triangle.
pub(crate) fn sym_matrix(k: usize, f: impl Fn(usize, usize) -> f64) -> Matrix<f64> {
    let mut a = Matrix::zeros(k, k);
    for j in 0..k {
        for i in j..k {
            let v = f(i, j);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}
