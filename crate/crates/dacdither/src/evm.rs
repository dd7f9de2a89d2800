//! Empirical EVM and the closed-form EVM/resolution predictors.
//!
//! EVM is the ratio of distortion power to desired-signal power at the user,
//! computed on complex baseband sample sequences. dB values are
//! `10 * log10(ratio)` since the ratio is a power ratio.

use crate::parallel::pairwise_sum;
use crate::{ComplexSample, Error, Result};

/// Empirical EVM with its analytical companions for one experiment point.
#[derive(Debug, Clone, PartialEq)]
pub struct EvmReport {
    /// `sum |received - desired|^2 / sum |desired|^2`
    pub empirical_evm: f64,
    pub empirical_evm_db: f64,
    pub sample_count: usize,
    /// Conventional-DAC best case, `M step^2 / (6 E[|y|^2])`.
    pub analytic_min: f64,
    /// Conventional-DAC worst case (coherent errors), `M^2 step^2 / (6 E[|y|^2])`.
    pub analytic_max: f64,
    /// Dithered-DAC prediction, `M step^2 / (3 E[|y|^2])`.
    pub analytic_dithered: f64,
    /// Clamped real-component count across all antennas and samples.
    pub clipped_samples: u64,
}

pub fn db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Empirical EVM over paired sample sequences.
pub fn empirical_evm(desired: &[ComplexSample], received: &[ComplexSample]) -> Result<f64> {
    if desired.is_empty() || desired.len() != received.len() {
        return Err(Error::LengthMismatch {
            expected: desired.len().max(1),
            actual: received.len(),
        });
    }
    let err: Vec<f64> = desired
        .iter()
        .zip(received)
        .map(|(d, r)| (r - d).norm_sqr())
        .collect();
    let sig: Vec<f64> = desired.iter().map(|d| d.norm_sqr()).collect();
    let sig_energy = pairwise_sum(&sig);
    if sig_energy <= 0.0 {
        return Err(Error::UndefinedMetric(
            "desired signal has zero energy".into(),
        ));
    }
    Ok(pairwise_sum(&err) / sig_energy)
}

/// Conventional-DAC EVM bounds `(min, max)`: uncorrelated errors give the
/// minimum, fully coherent errors the maximum, and `max / min = M`.
pub fn predict_conventional_bounds(antennas: usize, step: f64, signal_power: f64) -> (f64, f64) {
    let m = antennas as f64;
    let min = m * step * step / (6.0 * signal_power);
    (min, m * min)
}

/// Dithered-DAC EVM, direction-independent: `M step^2 / (3 E[|y|^2])`.
pub fn predict_dithered(antennas: usize, step: f64, signal_power: f64) -> f64 {
    antennas as f64 * step * step / (3.0 * signal_power)
}

/// Dithered-DAC EVM from resolution and headroom alone:
/// `Peak2rms / (3 M 2^(2(N-1)))` with `Peak2rms` in linear units.
pub fn predict_dithered_from_resolution(antennas: usize, bits: u32, peak2rms_linear: f64) -> f64 {
    let scale = 2f64.powi(2 * (bits as i32 - 1));
    peak2rms_linear / (3.0 * antennas as f64 * scale)
}

/// Step-size and bit savings of dithered over conventional DACs at equal
/// worst-case EVM: `(sqrt(M/2), log4(M/2))`.
pub fn resolution_tradeoff(antennas: usize) -> (f64, f64) {
    let half = antennas as f64 / 2.0;
    (half.sqrt(), half.ln() / 4f64.ln())
}
