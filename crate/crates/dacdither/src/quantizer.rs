//! Uniform mid-rise quantizer applied independently to the real and
//! imaginary baseband components, modeling an ideal N-bit DAC pair.
//!
//! Output codes are the odd multiples of `step / 2`; there is no code at
//! zero. Ties at the decision boundaries round away from zero, which is the
//! tie rule that preserves odd symmetry `Q(-x) = -Q(x)` at every nonzero
//! boundary. Inputs at exactly zero map to `+step / 2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{ComplexSample, Error, Result};

/// What to do with inputs beyond the DAC dynamic range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SaturationPolicy {
    /// Trust the caller; quantize the raw value even if the resulting code
    /// lies outside the representable set.
    AssumeInRange,
    /// Clamp to the nearest extreme code and count the event.
    SaturateAndCount,
}

/// N-bit uniform mid-rise quantizer configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerConfig {
    /// Number of bits, N >= 1. The code set has `2^N` levels.
    pub bits: u32,
    /// Quantization step, > 0, in signal units.
    pub step: f64,
    pub saturation: SaturationPolicy,
}

impl QuantizerConfig {
    pub fn new(bits: u32, step: f64) -> Result<Self> {
        if bits < 1 {
            return Err(Error::InvalidInput("bits must be >= 1".into()));
        }
        if !step.is_finite() || step <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "step must be finite and > 0, got {step}"
            )));
        }
        Ok(Self {
            bits,
            step,
            saturation: SaturationPolicy::SaturateAndCount,
        })
    }

    pub fn with_saturation(mut self, saturation: SaturationPolicy) -> Self {
        self.saturation = saturation;
        self
    }

    /// Magnitude of the extreme output code: `(2^(N-1) - 0.5) * step`.
    pub fn full_scale_code(&self) -> f64 {
        ((1u64 << (self.bits - 1)) as f64 - 0.5) * self.step
    }

    /// Half-open dynamic range `[-(2^(N-1)-1)*step, (2^(N-1)-1)*step)` used
    /// for range checks on unquantized inputs.
    pub fn dynamic_range(&self) -> (f64, f64) {
        let edge = ((1u64 << (self.bits - 1)) as f64 - 1.0) * self.step;
        (-edge, edge)
    }

    /// Number of output levels, `2^N`.
    pub fn levels(&self) -> u64 {
        1u64 << self.bits
    }
}

/// Complex quantization error plus a flag for saturated samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationError {
    pub value: ComplexSample,
    pub clipped: bool,
}

/// Quantize one real sample: `step * round(x/step + 0.5) - 0.5 * step`.
///
/// The clip accumulator is caller-owned; it is incremented once per clamped
/// real component under [`SaturationPolicy::SaturateAndCount`].
pub fn quantize_real(x: f64, cfg: &QuantizerConfig, clips: &mut u64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!(
            "non-finite quantizer input {x}"
        )));
    }
    // Evaluated on the magnitude so that Q(-x) == -Q(x) is bit-exact, with
    // ties at the decision boundaries rounding away from zero and x == 0
    // treated as positive. f64::round already resolves .5 ties away from
    // zero.
    let mut code = cfg.step * (x.abs() / cfg.step + 0.5).round() - 0.5 * cfg.step;
    let clipped = match cfg.saturation {
        SaturationPolicy::AssumeInRange => false,
        SaturationPolicy::SaturateAndCount => {
            let fs = cfg.full_scale_code();
            if code > fs {
                code = fs;
                true
            } else {
                false
            }
        }
    };
    if clipped {
        *clips += 1;
    }
    Ok(if x < 0.0 { -code } else { code })
}

/// Quantize real and imaginary components independently.
pub fn quantize_complex(
    x: ComplexSample,
    cfg: &QuantizerConfig,
    clips: &mut u64,
) -> Result<ComplexSample> {
    Ok(Complex64::new(
        quantize_real(x.re, cfg, clips)?,
        quantize_real(x.im, cfg, clips)?,
    ))
}

/// Quantization error `Q(x) - x` with a saturation flag.
pub fn quantization_error(x: ComplexSample, cfg: &QuantizerConfig) -> Result<QuantizationError> {
    let mut clips = 0u64;
    let q = quantize_complex(x, cfg, &mut clips)?;
    Ok(QuantizationError {
        value: q - x,
        clipped: clips > 0,
    })
}

/// The two output codes adjacent to `x`, with `x_lower <= x < x_lower + step`.
///
/// `x` must lie in the half-open dynamic range.
pub fn neighbor_codes(x: f64, cfg: &QuantizerConfig) -> Result<(f64, f64)> {
    let (lo, hi) = cfg.dynamic_range();
    if !x.is_finite() || x < lo || x >= hi {
        return Err(Error::OutOfRange { value: x, lo, hi });
    }
    let step = cfg.step;
    // floor (not truncation toward zero) keeps x_lower <= x on both signs.
    let lower = step * ((x + 0.5 * step) / step).floor() - 0.5 * step;
    Ok((lower, lower + step))
}
