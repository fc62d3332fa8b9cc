pub mod arith;
pub mod bessel_verify;
pub mod classfield;
pub mod error;
pub mod halfint;
pub mod lfunc;
pub mod quaternion;
pub mod siegel;

pub use error::{Error, Result};
