pub mod bessel;
pub mod constants;
pub mod error;

pub use error::{Error, Result};
pub mod physics;
pub mod coefficients;
pub mod pattern;
pub mod oracle;
pub mod fitting;
pub mod alignment;
