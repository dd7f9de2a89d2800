//! Half-wavelength uniform linear array steering, single-user matched
//! precoding, and line-of-sight aggregation of per-antenna DAC outputs.
//!
//! Antennas are indexed `m = 0..M-1`; the common unit phase dropped by the
//! zero-based shift cancels in every EVM quantity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::quantizer::{quantization_error, QuantizerConfig};
use crate::{ComplexSample, Error, Result};

/// Array geometry. Only the half-wavelength ULA (phase step `pi * sin(alpha)`
/// per element) is modeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    UniformLinearHalfWavelength,
}

/// Array size plus user directions (radians, within +-pi/2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScene {
    pub antennas: usize,
    pub user_directions: Vec<f64>,
    pub geometry: Geometry,
}

impl ChannelScene {
    pub fn new(antennas: usize, user_directions: Vec<f64>) -> Result<Self> {
        if antennas < 1 {
            return Err(Error::InvalidInput("antennas must be >= 1".into()));
        }
        if user_directions.is_empty() {
            return Err(Error::InvalidInput(
                "at least one user direction required".into(),
            ));
        }
        for &a in &user_directions {
            if !a.is_finite()
                || !(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2).contains(&a)
            {
                return Err(Error::InvalidInput(format!(
                    "direction {a} outside [-pi/2, pi/2]"
                )));
            }
        }
        Ok(Self {
            antennas,
            user_directions,
            geometry: Geometry::UniformLinearHalfWavelength,
        })
    }

    /// Convenience: one user at `alpha` radians.
    pub fn single_user(antennas: usize, alpha: f64) -> Result<Self> {
        Self::new(antennas, vec![alpha])
    }

    pub fn users(&self) -> usize {
        self.user_directions.len()
    }
}

/// Steering coefficient `exp(j * pi * m * sin(alpha))` as a function of the
/// phase in half-turn units `t = m * sin(alpha)`.
///
/// When `2t` is an exact integer the coefficient is one of `{1, j, -1, -j}`;
/// those cases are returned exactly (components in `{0, +-1}`) so that the
/// worst-case directions 0 and +-pi/2 admit bit-exact error coherence checks.
fn unit_phasor_half_turns(t: f64) -> Complex64 {
    let quarters = 2.0 * t;
    if quarters.fract() == 0.0 {
        match (quarters as i64).rem_euclid(4) {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    } else {
        let phase = std::f64::consts::PI * t;
        Complex64::new(phase.cos(), phase.sin())
    }
}

/// Steering coefficient of user `k` at antenna `m`.
pub fn steering(scene: &ChannelScene, k: usize, m: usize) -> Result<ComplexSample> {
    if k >= scene.users() {
        return Err(Error::InvalidInput(format!("user index {k} out of range")));
    }
    if m >= scene.antennas {
        return Err(Error::InvalidInput(format!(
            "antenna index {m} out of range"
        )));
    }
    Ok(unit_phasor_half_turns(
        m as f64 * scene.user_directions[k].sin(),
    ))
}

/// Full steering vector for user `k`.
pub fn steering_vector(scene: &ChannelScene, k: usize) -> Result<Vec<ComplexSample>> {
    (0..scene.antennas).map(|m| steering(scene, k, m)).collect()
}

/// Matched precoding for a single-user scene: `conj(c_1(m)) * y / M`.
pub fn matched_precode(y: ComplexSample, scene: &ChannelScene, m: usize) -> Result<ComplexSample> {
    if scene.users() != 1 {
        return Err(Error::UnsupportedConfiguration(
            "matched precoding is defined for single-user scenes only".into(),
        ));
    }
    let c = steering(scene, 0, m)?;
    Ok(c.conj() * y / scene.antennas as f64)
}

/// Signal arriving at user `k`: `sum_m c_k(m) * output_m`.
pub fn receive(
    scene: &ChannelScene,
    k: usize,
    antenna_outputs: &[ComplexSample],
) -> Result<ComplexSample> {
    if antenna_outputs.len() != scene.antennas {
        return Err(Error::LengthMismatch {
            expected: scene.antennas,
            actual: antenna_outputs.len(),
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, out) in antenna_outputs.iter().enumerate() {
        acc += steering(scene, k, m)? * out;
    }
    Ok(acc)
}

/// Verify the coherent worst case: with ditherless quantization and a user
/// direction where every steering coefficient is in `{+-1, +-j}`, the
/// per-antenna quantization errors must be exact rotated copies of the
/// antenna-0 error, `q_m = conj(c(m)/c(0)) * q_0`.
///
/// Returns true when the identity holds bit-exactly for this `y`.
pub fn worst_case_error_check(
    scene: &ChannelScene,
    y: ComplexSample,
    cfg: &QuantizerConfig,
) -> Result<bool> {
    if scene.users() != 1 {
        return Err(Error::UnsupportedConfiguration(
            "single-user scene required".into(),
        ));
    }
    let c = steering_vector(scene, 0)?;
    for cm in &c {
        let exact = (cm.re == 0.0 || cm.re.abs() == 1.0) && (cm.im == 0.0 || cm.im.abs() == 1.0);
        if !exact || cm.norm_sqr() != 1.0 {
            return Err(Error::UnsupportedConfiguration(
                "direction is not in the verified worst-case set {0, +-pi/2}".into(),
            ));
        }
    }
    let q0 = {
        let x0 = matched_precode(y, scene, 0)?;
        quantization_error(x0, cfg)?.value
    };
    for m in 0..scene.antennas {
        let xm = matched_precode(y, scene, m)?;
        let qm = quantization_error(xm, cfg)?.value;
        let expected = (c[m] / c[0]).conj() * q0;
        if qm != expected {
            return Ok(false);
        }
    }
    Ok(true)
}
