//! Computational kernels of analytic microlocal analysis with numerical oracles.

pub mod borel;
pub mod config;
pub mod cylinder;
pub mod error;
pub mod experiments;
pub mod fbi;
pub mod fit;
pub mod jets;
pub mod normalform;
pub mod quad;
pub mod quantize;
pub mod report;
pub mod statphase;
pub mod symbols;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
