//! Bilinear difference stencils, block sums, frequency symbols and quadratic
//! variations on square lattices.

mod matrix;
mod qv;
mod stencil;
pub mod symbols;

pub use matrix::{assemble_b, FilterMatrix, SparseRows, MATRIX_SIDE_CAP};
pub use qv::{
    apply_filter, block_sum, qv_from_filtered, quadratic_variations, sum_squares, QvStats,
    TrimMode,
};
pub use stencil::Stencil;
