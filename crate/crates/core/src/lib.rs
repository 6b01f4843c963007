pub mod besov;
pub mod calculus;
pub mod dilation;
pub mod divdiff;
pub mod error;
pub mod funcalc;
pub mod linalg;
pub mod matrix;
pub mod opint;
pub mod sampling;
pub mod semispectral;
pub mod suite;

pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, C64};
