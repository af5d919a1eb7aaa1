pub mod cli;
pub mod error;
pub mod fbm;
pub mod dynamics;
pub mod experiments;
pub mod kernels;
pub mod metrics;
mod linalg;
mod quad;
pub mod rng;

pub use error::{Error, Result};
