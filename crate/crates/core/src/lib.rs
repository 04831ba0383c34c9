//! Work statistics of a sudden quench in a chaotic quarter-stadium billiard,
//! computed three ways: a semiclassical dephasing-representation Monte Carlo
//! estimator, classical phase-space sampling, and an exact finite-difference
//! quantum reference.

pub mod analysis;
pub mod characteristic;
pub mod classical;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod output;
pub mod potential;
pub mod quantum;
pub mod sampler;
pub mod scenario;
pub mod spectra;
pub mod study;
pub mod trajectory;

pub use error::{Error, Result};
