//! Multi-antenna wireless energy transfer under correlated Rician fading.
//!
//! The crate covers the special functions behind the harvested-energy laws,
//! channel generation, harvester models, the five transmit strategies, their
//! analytic distributions and averages, and a deterministic Monte Carlo
//! engine for checking all of it.

pub mod analytic;
pub mod channel;
pub mod eh;
pub mod mc;
pub mod error;
pub mod quad;
pub mod specfun;
pub mod strategies;

pub use error::{Error, Result};
