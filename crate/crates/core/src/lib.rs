//! Divergence selection by maximum likelihood over exponential divergence
//! distributions, plus score matching, Tweedie densities and nonnegative
//! matrix factorization utilities.

pub mod densities;
pub mod datagen;
pub mod divergence;
pub mod error;
pub mod estimators;
pub mod factorization;
pub mod io;
pub mod numeric;
pub mod quadrature;
pub mod report;
mod serde_nonfinite;

pub use divergence::{DataPair, DivergenceSpec, Family};
pub use error::{DivselError, Result};
