//! Non-subtractive dithering: dither generation, the equivalent transfer
//! function of a quantizer with dithered input, and statistics of the
//! equivalent output noise.
//!
//! The equivalent transfer function is the conditional expectation of the
//! quantizer output given the desired input, i.e. the convolution of the
//! staircase with the dither PDF. For uniform dither of width equal to the
//! quantization step it is exactly linear on interior codes, and the output
//! decomposes into the desired signal plus a zero-mean equivalent noise that
//! is uncorrelated with the input and white across independently dithered
//! quantizers. The dither is added before the DAC and never subtracted
//! afterward; the receiver has no knowledge of it.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::quantizer::{neighbor_codes, quantize_complex, quantize_real, QuantizerConfig};
use crate::{ComplexSample, Error, Result};

/// Gaussian dither support is truncated at +-8 sigma for the convolution
/// integral; the omitted tail mass is below 1e-15.
const GAUSSIAN_SUPPORT_SIGMAS: f64 = 8.0;

/// Dither PDF family. Real and imaginary draws are always independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DitherSpec {
    /// Degenerate zero dither.
    None,
    /// Uniform on `[-width/2, +width/2)`.
    UniformSymmetric { width: f64 },
    /// Zero-mean normal with the given standard deviation.
    Gaussian { sigma: f64 },
    /// Symmetric triangular on `[-halfwidth, +halfwidth]`.
    Triangular { halfwidth: f64 },
}

impl DitherSpec {
    pub fn validate(&self) -> Result<()> {
        let param = match self {
            DitherSpec::None => return Ok(()),
            DitherSpec::UniformSymmetric { width } => *width,
            DitherSpec::Gaussian { sigma } => *sigma,
            DitherSpec::Triangular { halfwidth } => *halfwidth,
        };
        if !param.is_finite() || param <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "dither parameter must be finite and > 0, got {param}"
            )));
        }
        Ok(())
    }

    /// Support `[lo, hi]` of the (possibly truncated) PDF.
    fn support(&self) -> (f64, f64) {
        match self {
            DitherSpec::None => (0.0, 0.0),
            DitherSpec::UniformSymmetric { width } => (-0.5 * width, 0.5 * width),
            DitherSpec::Gaussian { sigma } => (
                -GAUSSIAN_SUPPORT_SIGMAS * sigma,
                GAUSSIAN_SUPPORT_SIGMAS * sigma,
            ),
            DitherSpec::Triangular { halfwidth } => (-halfwidth, *halfwidth),
        }
    }

    /// CDF of the dither amplitude.
    fn cdf(&self, t: f64) -> f64 {
        match self {
            DitherSpec::None => {
                if t < 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            DitherSpec::UniformSymmetric { width } => ((t + 0.5 * width) / width).clamp(0.0, 1.0),
            DitherSpec::Gaussian { sigma } => {
                0.5 * (1.0 + erf(t / (sigma * std::f64::consts::SQRT_2)))
            }
            DitherSpec::Triangular { halfwidth } => {
                let h = *halfwidth;
                if t <= -h {
                    0.0
                } else if t < 0.0 {
                    let u = t + h;
                    u * u / (2.0 * h * h)
                } else if t < h {
                    let u = h - t;
                    1.0 - u * u / (2.0 * h * h)
                } else {
                    1.0
                }
            }
        }
    }
}

/// One complex dither draw; real then imaginary, independent.
pub fn draw_dither(spec: &DitherSpec, rng: &mut ChaCha8Rng) -> ComplexSample {
    match spec {
        DitherSpec::None => Complex64::new(0.0, 0.0),
        DitherSpec::UniformSymmetric { width } => Complex64::new(
            (rng.random::<f64>() - 0.5) * width,
            (rng.random::<f64>() - 0.5) * width,
        ),
        DitherSpec::Gaussian { sigma } => {
            // Polar Box-Muller: one pair of uniforms yields an independent
            // normal pair, drawn re then im.
            let u1: f64 = rng.random();
            let u2: f64 = rng.random();
            let r = sigma * (-2.0 * (1.0 - u1).ln()).sqrt();
            let theta = 2.0 * std::f64::consts::PI * u2;
            Complex64::new(r * theta.cos(), r * theta.sin())
        }
        DitherSpec::Triangular { halfwidth } => {
            let draw = |rng: &mut ChaCha8Rng| {
                let u1: f64 = rng.random();
                let u2: f64 = rng.random();
                (u1 + u2 - 1.0) * halfwidth
            };
            let re = draw(rng);
            let im = draw(rng);
            Complex64::new(re, im)
        }
    }
}

/// Quantize `x + w` with a fresh dither draw; the dither is not subtracted.
pub fn dithered_quantize(
    x: ComplexSample,
    spec: &DitherSpec,
    cfg: &QuantizerConfig,
    rng: &mut ChaCha8Rng,
    clips: &mut u64,
) -> Result<ComplexSample> {
    let w = draw_dither(spec, rng);
    quantize_complex(x + w, cfg, clips)
}

/// How a transfer curve was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferMethod {
    ClosedFormUniform,
    NumericConvolution,
    MonteCarlo,
}

/// Equivalent transfer function `F` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub method: TransferMethod,
}

fn check_grid(grid: &[f64], cfg: &QuantizerConfig) -> Result<()> {
    let (lo, hi) = cfg.dynamic_range();
    let mut prev = f64::NEG_INFINITY;
    for &x in grid {
        if !x.is_finite() || x < lo || x >= hi {
            return Err(Error::OutOfRange { value: x, lo, hi });
        }
        if x <= prev {
            return Err(Error::InvalidInput(
                "transfer grid must be strictly increasing".into(),
            ));
        }
        prev = x;
    }
    Ok(())
}

/// Closed-form equivalent transfer function for uniform dither of width equal
/// to the quantization step: `F(x) = (x_L (x_U - x) + x_U (x - x_L)) / step`,
/// which reduces to the identity on every interior point.
pub fn transfer_function_closed_form_uniform(
    grid: &[f64],
    spec: &DitherSpec,
    cfg: &QuantizerConfig,
) -> Result<TransferCurve> {
    match spec {
        DitherSpec::UniformSymmetric { width } if (width - cfg.step).abs() <= 1e-12 * cfg.step => {}
        _ => {
            return Err(Error::UnsupportedConfiguration(
                "closed form requires uniform dither with width equal to the quantization step"
                    .into(),
            ))
        }
    }
    check_grid(grid, cfg)?;
    let values = grid
        .iter()
        .map(|&x| {
            let (xl, xu) = neighbor_codes(x, cfg)?;
            Ok((xl * (xu - x) + xu * (x - xl)) / cfg.step)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(TransferCurve {
        grid: grid.to_vec(),
        values,
        method: TransferMethod::ClosedFormUniform,
    })
}

/// Equivalent transfer function by direct evaluation of the convolution
/// integral `F(x) = E[Q(x + w) | x]`.
///
/// The staircase is piecewise constant in `w`, so the integral is computed
/// segment by segment between the decision boundaries using the dither CDF;
/// the only approximation is the truncation of unbounded supports.
pub fn transfer_function_numeric(
    grid: &[f64],
    spec: &DitherSpec,
    cfg: &QuantizerConfig,
) -> Result<TransferCurve> {
    spec.validate()?;
    check_grid(grid, cfg)?;
    let values = grid
        .iter()
        .map(|&x| numeric_transfer_at(x, spec, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(TransferCurve {
        grid: grid.to_vec(),
        values,
        method: TransferMethod::NumericConvolution,
    })
}

fn numeric_transfer_at(x: f64, spec: &DitherSpec, cfg: &QuantizerConfig) -> Result<f64> {
    let mut clips = 0u64;
    if matches!(spec, DitherSpec::None) {
        // point-mass dither: the staircase itself
        return quantize_real(x, cfg, &mut clips);
    }
    let (w_lo, w_hi) = spec.support();
    let step = cfg.step;
    // Decision boundaries sit at integer multiples of the step; collect those
    // falling inside the shifted support (x + w crosses k * step).
    let k_min = ((x + w_lo) / step).ceil() as i64;
    let k_max = ((x + w_hi) / step).floor() as i64;
    let mut cuts = Vec::with_capacity((k_max - k_min + 3).max(2) as usize);
    cuts.push(w_lo);
    for k in k_min..=k_max {
        let w = k as f64 * step - x;
        if w > w_lo && w < w_hi {
            cuts.push(w);
        }
    }
    cuts.push(w_hi);
    let mut acc = 0.0;
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let mass = spec.cdf(b) - spec.cdf(a);
        if mass <= 0.0 {
            continue;
        }
        let code = quantize_real(x + 0.5 * (a + b), cfg, &mut clips)?;
        acc += code * mass;
    }
    Ok(acc)
}

/// One sample of equivalent output noise with its saturation flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSample {
    pub value: ComplexSample,
    /// True when the dithered input saturated the DAC; the linear transfer
    /// function does not apply at the range edge, so flagged samples are
    /// excluded from linearity assertions.
    pub saturated: bool,
}

/// Equivalent output noise `n = Q(x + w) - F(x)` for one complex sample.
///
/// `F` is the closed-form identity for uniform dither matching the step, and
/// the numeric convolution otherwise. Ditherless operation has no equivalent
/// noise decomposition; use `quantization_error` instead.
pub fn equivalent_noise(
    x: ComplexSample,
    spec: &DitherSpec,
    cfg: &QuantizerConfig,
    rng: &mut ChaCha8Rng,
    clips: &mut u64,
) -> Result<NoiseSample> {
    spec.validate()?;
    let transfer = match spec {
        DitherSpec::None => {
            return Err(Error::UnsupportedConfiguration(
                "equivalent noise is defined only for dithered operation".into(),
            ))
        }
        DitherSpec::UniformSymmetric { width } if (width - cfg.step).abs() <= 1e-12 * cfg.step => {
            // F(x) = x on interior codes
            x
        }
        _ => Complex64::new(
            numeric_transfer_at(x.re, spec, cfg)?,
            numeric_transfer_at(x.im, spec, cfg)?,
        ),
    };
    let before = *clips;
    let out = dithered_quantize(x, spec, cfg, rng, clips)?;
    Ok(NoiseSample {
        value: out - transfer,
        saturated: *clips > before,
    })
}

/// Sample statistics of equivalent noise across two quantizers.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentNoiseStats {
    pub mean: ComplexSample,
    /// Complex variance `E[|n - mean|^2]` of the first noise sequence.
    pub variance: f64,
    /// Normalized complex correlation between the first noise sequence and
    /// the input.
    pub input_correlation: Complex64,
    /// Normalized complex correlation between the two noise sequences.
    pub pairwise_correlation: Complex64,
    pub sample_count: usize,
    /// `|mean| / (sigma / sqrt(n))`
    pub mean_z: f64,
    /// `|rho| * sqrt(n)` for the two correlations.
    pub input_correlation_z: f64,
    pub pairwise_correlation_z: f64,
}

fn normalized_correlation(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let cross: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let ea: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let eb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    let denom = (ea * eb).sqrt();
    if denom == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        cross / denom
    }
}

/// Check the equivalent-noise properties on paired samples from two antennas:
/// zero mean, no correlation with the input, and no cross-antenna
/// correlation, each with a z-score against the null.
pub fn noise_property_test(
    inputs: &[ComplexSample],
    noise_a: &[ComplexSample],
    noise_b: &[ComplexSample],
) -> Result<EquivalentNoiseStats> {
    const MIN_SAMPLES: usize = 10_000;
    let n = noise_a.len();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_SAMPLES,
            got: n,
        });
    }
    if inputs.len() != n || noise_b.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: inputs.len().min(noise_b.len()),
        });
    }
    let nf = n as f64;
    let mean: Complex64 = noise_a.iter().sum::<Complex64>() / nf;
    let variance = noise_a.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / nf;
    let input_correlation = normalized_correlation(noise_a, inputs);
    let pairwise_correlation = normalized_correlation(noise_a, noise_b);
    let mean_z = if variance > 0.0 {
        mean.norm() / (variance.sqrt() / nf.sqrt())
    } else {
        0.0
    };
    Ok(EquivalentNoiseStats {
        mean,
        variance,
        input_correlation,
        pairwise_correlation,
        sample_count: n,
        mean_z,
        input_correlation_z: input_correlation.norm() * nf.sqrt(),
        pairwise_correlation_z: pairwise_correlation.norm() * nf.sqrt(),
    })
}
