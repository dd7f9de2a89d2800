//! Simulation and analysis toolkit for arrays of low-resolution DACs in a
//! line-of-sight MIMO downlink transmitter.
//!
//! The library models each complex DAC as a pair of uniform mid-rise
//! quantizers, optionally driven with non-subtractive digital dither, and
//! measures the error vector magnitude (EVM) of the signal arriving at a
//! single user served by a half-wavelength uniform linear array with matched
//! precoding.
//!
//! Modules:
//!
//! - [`quantizer`] — exact scalar/complex mid-rise quantization with
//!   saturation accounting and error decomposition.
//! - [`dither`] — dither generation, the equivalent transfer function of a
//!   dithered quantizer, and equivalent-noise statistics.
//! - [`channel`] — ULA steering, matched precoding, and line-of-sight
//!   aggregation at the user.
//! - [`evm`] — empirical EVM and all closed-form EVM/resolution predictors.
//! - [`montecarlo`] — seeded, reproducible Monte Carlo experiments: step
//!   calibration, angle sweeps, resolution sweeps, and a validation suite.
//! - [`rng`] — counter-based per-(trial, antenna, role) random streams so
//!   results are bit-identical at any worker count.
//! - [`cli`] — config resolution, table emission, and subcommand runners
//!   backing the `dacdither` binary.
//!
//! With the default `parallel` feature, Monte Carlo trials fan out across a
//! rayon pool; disabling it yields a fully sequential build with identical
//! numerical output.

pub mod channel;
pub mod cli;
pub mod dither;
pub mod evm;
pub mod montecarlo;
pub mod parallel;
pub mod quantizer;
pub mod rng;

use num_complex::Complex64;
use thiserror::Error;

/// Complex baseband sample in signal units.
pub type ComplexSample = Complex64;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("input {value} outside dynamic range [{lo}, {hi})")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
