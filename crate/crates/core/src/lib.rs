pub mod error;
pub mod exec;
pub mod grid;
pub mod linalg;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use exec::Exec;
pub use grid::Grid;
pub mod filter;
pub mod gcmodel;
pub mod fieldsim;
pub mod asymptotics;
pub mod estimate;
pub mod robust;
