//! Seeded, reproducible Monte Carlo experiments: step calibration from the
//! configured headroom, Gaussian signal generation, the full
//! precode-dither-quantize-aggregate chain, angle and resolution sweeps, and
//! an aggregated validation suite.
//!
//! Power conventions: `signal_power` is the complex variance of the user
//! signal. Under matched precoding the per-antenna complex power is
//! `signal_power / M^2`, and the headroom calibration relates the per-real
//! full scale to that per-antenna power, which is the convention under which
//! the resolution-based EVM prediction and the step-based one agree exactly.
//! Every trial draws from
//! counter-based streams keyed by `(master_seed, trial, antenna, role)`, and
//! reductions use a fixed tree, so sweep tables are bit-identical at any
//! worker count.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{steering_vector, worst_case_error_check, ChannelScene};
use crate::dither::{
    draw_dither, equivalent_noise, noise_property_test, transfer_function_closed_form_uniform,
    transfer_function_numeric, DitherSpec,
};
use crate::evm::{
    db, from_db, predict_conventional_bounds, predict_dithered, predict_dithered_from_resolution,
    EvmReport,
};
use crate::parallel::{map_trials, map_trials_seq, pairwise_sum};
use crate::quantizer::{quantization_error, quantize_complex, QuantizerConfig};
use crate::rng::{RngSpace, StreamRole};
use crate::{ComplexSample, Error, Result};

/// Dither PDF family selector; the scale parameter is resolved against the
/// calibrated quantization step at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DitherFamily {
    None,
    Uniform,
    Gaussian,
    Triangular,
}

/// Full experiment description. Field names are the config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Array size M for single-point runs and angle sweeps.
    pub antennas: usize,
    /// DAC resolution N in bits.
    pub bits: u32,
    /// Ratio of DAC full-scale power to input RMS power, in dB.
    pub peak2rms_db: f64,
    /// Monte Carlo trials per experiment point.
    pub samples: usize,
    /// Departure angles for the angle sweep, degrees.
    pub angle_grid_deg: Vec<f64>,
    /// Array sizes for the resolution sweep.
    pub m_grid: Vec<usize>,
    /// Bit counts for the resolution sweep.
    pub n_grid: Vec<u32>,
    pub master_seed: u64,
    /// Dither family; `uniform` with scale 1 is the optimal choice.
    pub dither_family: DitherFamily,
    /// Dither parameter in units of the quantization step: uniform width,
    /// Gaussian sigma, or triangular halfwidth.
    pub dither_scale: f64,
    /// Complex variance of the user signal, `E[|y|^2]`.
    pub signal_power: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            antennas: 100,
            bits: 6,
            peak2rms_db: 15.0,
            samples: 10_000,
            angle_grid_deg: default_angle_grid(),
            m_grid: vec![1, 10, 100],
            n_grid: (2..=8).collect(),
            master_seed: 0x5EED_0DAC,
            dither_family: DitherFamily::Uniform,
            dither_scale: 1.0,
            signal_power: 1.0,
        }
    }
}

/// -90..=90 degrees in 3-degree steps (61 points).
pub fn default_angle_grid() -> Vec<f64> {
    (-30..=30).map(|i| (i * 3) as f64).collect()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, msg: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{key}: {msg}")))
            }
        };
        check(
            self.antennas >= 1,
            "antennas",
            format!("must be >= 1, got {}", self.antennas),
        )?;
        check(
            self.bits >= 1 && self.bits <= 32,
            "bits",
            format!("must be in 1..=32, got {}", self.bits),
        )?;
        check(
            self.peak2rms_db > 0.0 && self.peak2rms_db.is_finite(),
            "peak2rms_db",
            format!(
                "linear value must exceed 1 (dB > 0), got {}",
                self.peak2rms_db
            ),
        )?;
        check(
            self.samples >= 1,
            "samples",
            format!("must be >= 1, got {}", self.samples),
        )?;
        check(
            !self.angle_grid_deg.is_empty(),
            "angle_grid_deg",
            "must be non-empty".into(),
        )?;
        for &a in &self.angle_grid_deg {
            check(
                a.is_finite() && (-90.0..=90.0).contains(&a),
                "angle_grid_deg",
                format!("angle {a} outside [-90, 90]"),
            )?;
        }
        check(
            !self.m_grid.is_empty(),
            "m_grid",
            "must be non-empty".into(),
        )?;
        check(
            self.m_grid.iter().all(|&m| m >= 1),
            "m_grid",
            "entries must be >= 1".into(),
        )?;
        check(
            !self.n_grid.is_empty(),
            "n_grid",
            "must be non-empty".into(),
        )?;
        check(
            self.n_grid.iter().all(|&n| (1..=32).contains(&n)),
            "n_grid",
            "entries must be in 1..=32".into(),
        )?;
        check(
            self.signal_power > 0.0 && self.signal_power.is_finite(),
            "signal_power",
            format!("must be finite and > 0, got {}", self.signal_power),
        )?;
        if self.dither_family != DitherFamily::None {
            check(
                self.dither_scale > 0.0 && self.dither_scale.is_finite(),
                "dither_scale",
                format!("must be finite and > 0, got {}", self.dither_scale),
            )?;
        }
        Ok(())
    }

    pub fn peak2rms_linear(&self) -> f64 {
        from_db(self.peak2rms_db)
    }

    /// Per-antenna complex DAC input power under matched precoding.
    pub fn per_antenna_power(&self, antennas: usize) -> f64 {
        self.signal_power / (antennas as f64).powi(2)
    }

    /// Calibrated step for a given array size and resolution.
    pub fn step_for(&self, antennas: usize, bits: u32) -> f64 {
        calibrate_step(
            bits,
            self.peak2rms_linear(),
            self.per_antenna_power(antennas),
        )
    }

    /// Dither spec resolved against a calibrated step.
    pub fn dither_spec(&self, step: f64) -> DitherSpec {
        let p = self.dither_scale * step;
        match self.dither_family {
            DitherFamily::None => DitherSpec::None,
            DitherFamily::Uniform => DitherSpec::UniformSymmetric { width: p },
            DitherFamily::Gaussian => DitherSpec::Gaussian { sigma: p },
            DitherFamily::Triangular => DitherSpec::Triangular { halfwidth: p },
        }
    }
}

/// Solve the headroom relation `Peak2rms = (2^(N-1) step)^2 / E[x^2]` for the
/// step: `step = sqrt(peak2rms * E[x^2]) / 2^(N-1)`, with `E[x^2]` the
/// per-antenna signal power.
pub fn calibrate_step(bits: u32, peak2rms_linear: f64, per_antenna_power: f64) -> f64 {
    (peak2rms_linear * per_antenna_power).sqrt() / 2f64.powi(bits as i32 - 1)
}

/// One circularly-symmetric complex Gaussian draw with complex variance
/// `power`; consumes exactly two uniforms.
pub fn draw_cscg(rng: &mut ChaCha8Rng, power: f64) -> Complex64 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let r = (-power * (1.0 - u1).ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    Complex64::new(r * theta.cos(), r * theta.sin())
}

/// i.i.d. CSCG user-signal sequence; sample `i` comes from stream
/// `(master_seed, i, 0, Signal)`, so the sequence is independent of how it is
/// chunked across workers.
pub fn generate_user_signal(
    count: usize,
    signal_power: f64,
    space: &RngSpace,
) -> Vec<ComplexSample> {
    map_trials(count as u64, |i| {
        let mut rng = space.stream(i, 0, StreamRole::Signal);
        draw_cscg(&mut rng, signal_power)
    })
}

/// Run the full chain for one direction: per trial, draw the user signal,
/// matched-precode it onto every antenna, dither (optionally) and quantize,
/// aggregate at the user, and accumulate EVM energies.
pub fn simulate_chain(cfg: &ExperimentConfig, alpha_rad: f64, dithered: bool) -> Result<EvmReport> {
    simulate_chain_impl(cfg, alpha_rad, dithered, true)
}

/// Sequential variant used as the benchmark baseline.
pub fn simulate_chain_seq(
    cfg: &ExperimentConfig,
    alpha_rad: f64,
    dithered: bool,
) -> Result<EvmReport> {
    simulate_chain_impl(cfg, alpha_rad, dithered, false)
}

fn simulate_chain_impl(
    cfg: &ExperimentConfig,
    alpha_rad: f64,
    dithered: bool,
    parallel: bool,
) -> Result<EvmReport> {
    cfg.validate()?;
    let m = cfg.antennas;
    let scene = ChannelScene::single_user(m, alpha_rad)?;
    let steer = steering_vector(&scene, 0)?;
    let precode: Vec<Complex64> = steer.iter().map(|c| c.conj() / m as f64).collect();
    let step = cfg.step_for(m, cfg.bits);
    let qcfg = QuantizerConfig::new(cfg.bits, step)?;
    let spec = if dithered {
        cfg.dither_spec(step)
    } else {
        DitherSpec::None
    };
    spec.validate()?;
    let space = RngSpace::new(cfg.master_seed);
    let signal_power = cfg.signal_power;

    let per_trial = |t: u64| -> (f64, f64, u64) {
        let mut sig_rng = space.stream(t, 0, StreamRole::Signal);
        let y = draw_cscg(&mut sig_rng, signal_power);
        let mut rx = Complex64::new(0.0, 0.0);
        let mut clips = 0u64;
        for ant in 0..m {
            let x = precode[ant] * y;
            let input = if matches!(spec, DitherSpec::None) {
                x
            } else {
                let mut dither_rng = space.stream(t, ant as u64, StreamRole::Dither);
                x + draw_dither(&spec, &mut dither_rng)
            };
            // inputs are finite by construction
            let q = quantize_complex(input, &qcfg, &mut clips).expect("finite chain sample");
            rx += steer[ant] * q;
        }
        let e = rx - y;
        (e.norm_sqr(), y.norm_sqr(), clips)
    };

    let outcomes = if parallel {
        map_trials(cfg.samples as u64, per_trial)
    } else {
        map_trials_seq(cfg.samples as u64, per_trial)
    };
    let err: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let sig: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
    let clipped_samples: u64 = outcomes.iter().map(|o| o.2).sum();
    let sig_energy = pairwise_sum(&sig);
    if sig_energy <= 0.0 {
        return Err(Error::UndefinedMetric("zero signal energy in chain".into()));
    }
    let empirical = pairwise_sum(&err) / sig_energy;
    let (analytic_min, analytic_max) = predict_conventional_bounds(m, step, signal_power);
    Ok(EvmReport {
        empirical_evm: empirical,
        empirical_evm_db: db(empirical),
        sample_count: cfg.samples,
        analytic_min,
        analytic_max,
        analytic_dithered: predict_dithered(m, step, signal_power),
        clipped_samples,
    })
}

/// One sweep-table row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub angle_deg: f64,
    pub antennas: usize,
    pub bits: u32,
    pub evm_conventional_db: f64,
    pub evm_dithered_db: f64,
    pub evm_analytic_db: f64,
    pub clipped_samples: u64,
    pub samples: usize,
}

/// EVM versus departure angle at the configured `(antennas, bits)`:
/// conventional, dithered, and the analytic dithered prediction per angle.
pub fn angle_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let analytic = predict_dithered_from_resolution(cfg.antennas, cfg.bits, cfg.peak2rms_linear());
    cfg.angle_grid_deg
        .iter()
        .map(|&angle_deg| {
            let alpha = angle_deg.to_radians();
            let conventional = simulate_chain(cfg, alpha, false)?;
            let dithered = simulate_chain(cfg, alpha, true)?;
            Ok(SweepRow {
                angle_deg,
                antennas: cfg.antennas,
                bits: cfg.bits,
                evm_conventional_db: conventional.empirical_evm_db,
                evm_dithered_db: dithered.empirical_evm_db,
                evm_analytic_db: db(analytic),
                clipped_samples: conventional.clipped_samples + dithered.clipped_samples,
                samples: cfg.samples,
            })
        })
        .collect()
}

/// Worst-case (broadside) EVM over the `(m_grid, n_grid)` product.
pub fn resolution_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.m_grid.len() * cfg.n_grid.len());
    for &antennas in &cfg.m_grid {
        for &bits in &cfg.n_grid {
            let point = ExperimentConfig {
                antennas,
                bits,
                ..cfg.clone()
            };
            let conventional = simulate_chain(&point, 0.0, false)?;
            let dithered = simulate_chain(&point, 0.0, true)?;
            let analytic = predict_dithered_from_resolution(antennas, bits, cfg.peak2rms_linear());
            rows.push(SweepRow {
                angle_deg: 0.0,
                antennas,
                bits,
                evm_conventional_db: conventional.empirical_evm_db,
                evm_dithered_db: dithered.empirical_evm_db,
                evm_analytic_db: db(analytic),
                clipped_samples: conventional.clipped_samples + dithered.clipped_samples,
                samples: cfg.samples,
            });
        }
    }
    Ok(rows)
}

/// Per-component quantization-error variance for a uniform input spanning the
/// full dynamic range.
pub fn measure_quantization_error_variance(
    qcfg: &QuantizerConfig,
    samples: usize,
    space: &RngSpace,
) -> f64 {
    let (lo, hi) = qcfg.dynamic_range();
    let per_trial: Vec<(f64, f64)> = map_trials(samples as u64, |t| {
        let mut rng = space.stream(t, 0, StreamRole::Signal);
        let x = lo + (hi - lo) * rng.random::<f64>();
        let mut clips = 0u64;
        let e = crate::quantizer::quantize_real(x, qcfg, &mut clips).expect("finite") - x;
        (e, e * e)
    });
    let sums: Vec<f64> = per_trial.iter().map(|p| p.0).collect();
    let sq: Vec<f64> = per_trial.iter().map(|p| p.1).collect();
    let n = samples as f64;
    let mean = pairwise_sum(&sums) / n;
    pairwise_sum(&sq) / n - mean * mean
}

/// Complex variances `(conventional, dithered)` of a single DAC driven with
/// Gaussian input at the given headroom: ditherless quantization error versus
/// equivalent noise under uniform step-width dither.
pub fn measure_noise_variances(
    bits: u32,
    peak2rms_db: f64,
    samples: usize,
    space: &RngSpace,
) -> Result<(f64, f64)> {
    let power = 1.0;
    let step = calibrate_step(bits, from_db(peak2rms_db), power);
    let qcfg = QuantizerConfig::new(bits, step)?;
    let spec = DitherSpec::UniformSymmetric { width: step };
    let per_trial: Vec<(f64, f64)> = map_trials(samples as u64, |t| {
        let mut sig = space.stream(t, 0, StreamRole::Signal);
        let x = draw_cscg(&mut sig, power);
        let q = quantization_error(x, &qcfg)
            .expect("finite")
            .value
            .norm_sqr();
        let mut dith = space.stream(t, 0, StreamRole::Dither);
        let mut clips = 0u64;
        let n = equivalent_noise(x, &spec, &qcfg, &mut dith, &mut clips)
            .expect("dithered spec")
            .value
            .norm_sqr();
        (q, n)
    });
    let conv: Vec<f64> = per_trial.iter().map(|p| p.0).collect();
    let dith: Vec<f64> = per_trial.iter().map(|p| p.1).collect();
    let n = samples as f64;
    Ok((pairwise_sum(&conv) / n, pairwise_sum(&dith) / n))
}

/// One entry of the validation report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Measured statistic (interpretation depends on the check).
    pub statistic: f64,
    /// Threshold the statistic was held against.
    pub threshold: f64,
    pub detail: String,
}

/// Aggregated pass/fail report of the cross-module statistical checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Run every invariant check: quantizer statistics and symmetries, the
/// transfer-function identity, equivalent-noise variance and whiteness
/// (including the deliberate shared-stream misuse), worst-case coherence,
/// and the predictor consistency chain. Failures are report entries, never
/// errors.
pub fn validation_suite(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    let mut checks = Vec::new();
    let space = RngSpace::new(cfg.master_seed);
    let push =
        |checks: &mut Vec<CheckResult>, name, passed, statistic, threshold, detail: String| {
            checks.push(CheckResult {
                name,
                passed,
                statistic,
                threshold,
                detail,
            });
        };

    // quantization-error variance, uniform full-range input
    {
        let qcfg = QuantizerConfig::new(cfg.bits, 1.0)?;
        let var = measure_quantization_error_variance(&qcfg, 1_000_000, &space);
        let expect = 1.0 / 12.0;
        let rel = (var - expect).abs() / expect;
        push(
            &mut checks,
            "quantizer_error_variance",
            rel < 0.01,
            rel,
            0.01,
            format!("var {var:.6e} vs step^2/12 = {expect:.6e}, 1e6 samples"),
        );
    }

    // quantizer odd and quarter-rotation symmetry, exact
    {
        let qcfg = QuantizerConfig::new(cfg.bits, 0.37)?;
        let j = Complex64::new(0.0, 1.0);
        let mut failures = 0usize;
        let n = 10_000;
        for t in 0..n {
            let mut rng = space.stream(t as u64, 1, StreamRole::Signal);
            let x = draw_cscg(&mut rng, 1.0);
            let mut clips = 0u64;
            let a = quantize_complex(x, &qcfg, &mut clips).unwrap();
            let neg = quantize_complex(-x, &qcfg, &mut clips).unwrap();
            let rot = quantize_complex(j * x, &qcfg, &mut clips).unwrap();
            if neg != -a || rot != j * a {
                failures += 1;
            }
        }
        push(
            &mut checks,
            "quantizer_symmetry",
            failures == 0,
            failures as f64,
            0.0,
            format!("{failures} symmetry violations over {n} draws"),
        );
    }

    // closed-form transfer identity and numeric agreement
    {
        let qcfg = QuantizerConfig::new(cfg.bits, 1.0)?;
        let spec = DitherSpec::UniformSymmetric { width: 1.0 };
        let (lo, hi) = qcfg.dynamic_range();
        let grid: Vec<f64> = (0..10_000)
            .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / 10_000.0)
            .collect();
        let closed = transfer_function_closed_form_uniform(&grid, &spec, &qcfg)?;
        let max_dev = closed
            .grid
            .iter()
            .zip(&closed.values)
            .map(|(x, f)| (f - x).abs())
            .fold(0.0f64, f64::max);
        push(
            &mut checks,
            "transfer_identity",
            max_dev < 1e-12,
            max_dev,
            1e-12,
            "max |F(x) - x| over 1e4-point grid".into(),
        );

        let coarse: Vec<f64> = grid.iter().step_by(10).copied().collect();
        let numeric = transfer_function_numeric(&coarse, &spec, &qcfg)?;
        let closed_coarse = transfer_function_closed_form_uniform(&coarse, &spec, &qcfg)?;
        let max_gap = numeric
            .values
            .iter()
            .zip(&closed_coarse.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        push(
            &mut checks,
            "transfer_numeric_vs_closed",
            max_gap < 1e-9,
            max_gap,
            1e-9,
            "max |numeric - closed| over 1e3-point grid".into(),
        );
    }

    // equivalent-noise variance and the 3 dB penalty
    {
        let (conv, dith) = measure_noise_variances(cfg.bits, cfg.peak2rms_db, 1_000_000, &space)?;
        let step = calibrate_step(cfg.bits, cfg.peak2rms_linear(), 1.0);
        let expect_dith = step * step / 3.0;
        let rel = (dith - expect_dith).abs() / expect_dith;
        push(
            &mut checks,
            "dithered_noise_variance",
            rel < 0.01,
            rel,
            0.01,
            format!("complex var {dith:.6e} vs step^2/3 = {expect_dith:.6e}"),
        );
        let ratio = dith / conv;
        push(
            &mut checks,
            "penalty_ratio_3db",
            (ratio - 2.0).abs() < 0.1,
            ratio,
            2.0,
            format!("dithered/conventional variance ratio {ratio:.4} (expect 2 within 5%)"),
        );
    }

    // whiteness across independently dithered antennas, plus the misuse case
    {
        let qcfg = QuantizerConfig::new(cfg.bits, 0.2)?;
        let spec = DitherSpec::UniformSymmetric { width: 0.2 };
        let n = 100_000usize;
        let collect = |shared: bool| -> Result<_> {
            let mut inputs = Vec::with_capacity(n);
            let mut na = Vec::with_capacity(n);
            let mut nb = Vec::with_capacity(n);
            let mut clips = 0u64;
            for t in 0..n as u64 {
                let mut sig = space.stream(t, 2, StreamRole::Signal);
                let x = draw_cscg(&mut sig, 1.0);
                let mut ra = space.stream(t, 0, StreamRole::Dither);
                let mut rb = space.stream(t, if shared { 0 } else { 1 }, StreamRole::Dither);
                inputs.push(x);
                na.push(equivalent_noise(x, &spec, &qcfg, &mut ra, &mut clips)?.value);
                nb.push(equivalent_noise(x, &spec, &qcfg, &mut rb, &mut clips)?.value);
            }
            noise_property_test(&inputs, &na, &nb)
        };
        let stats = collect(false)?;
        let worst_z = stats
            .mean_z
            .max(stats.input_correlation_z)
            .max(stats.pairwise_correlation_z);
        push(
            &mut checks,
            "noise_whiteness",
            worst_z < 3.0,
            worst_z,
            3.0,
            format!(
                "z-scores: mean {:.2}, input {:.2}, pairwise {:.2} over {n} samples",
                stats.mean_z, stats.input_correlation_z, stats.pairwise_correlation_z
            ),
        );
        let misuse = collect(true)?;
        push(
            &mut checks,
            "shared_dither_detected",
            misuse.pairwise_correlation_z > 10.0,
            misuse.pairwise_correlation_z,
            10.0,
            "shared dither streams must produce significant cross-correlation".into(),
        );
    }

    // worst-case coherence at broadside and endfire
    {
        let qcfg = QuantizerConfig::new(cfg.bits, 0.01)?;
        let signals = generate_user_signal(1000, 1.0, &space);
        let mut failures = 0usize;
        for &alpha in &[0.0, std::f64::consts::FRAC_PI_2] {
            let scene = ChannelScene::single_user(16, alpha)?;
            for &y in &signals {
                if !worst_case_error_check(&scene, y, &qcfg)? {
                    failures += 1;
                }
            }
        }
        push(
            &mut checks,
            "worst_case_coherence",
            failures == 0,
            failures as f64,
            0.0,
            format!("{failures} coherence violations over 2x1000 draws"),
        );
    }

    // predictor consistency chain and calibration round trip
    {
        let mut worst = 0.0f64;
        for i in 0..100 {
            let m = 1 + (i % 10) * 37;
            let bits = 2 + (i % 7) as u32;
            let power = 0.25 + 0.05 * i as f64;
            let p2r = 4.0 + 0.4 * (i % 25) as f64;
            let step = calibrate_step(bits, p2r, power / (m as f64).powi(2));
            let (lo, hi) = predict_conventional_bounds(m, step, power);
            let d = predict_dithered(m, step, power);
            let from_res = predict_dithered_from_resolution(m, bits, p2r);
            worst = worst
                .max((d - 2.0 * lo).abs() / d)
                .max((hi - m as f64 * lo).abs() / hi)
                .max((from_res - d).abs() / d);
        }
        push(
            &mut checks,
            "predictor_consistency",
            worst < 1e-12,
            worst,
            1e-12,
            "dithered = 2 min, max = M min, resolution form = step form, 100-point grid".into(),
        );
    }

    Ok(ValidationReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_matches_protocol() {
        let g = default_angle_grid();
        assert_eq!(g.len(), 61);
        assert_eq!(g[0], -90.0);
        assert_eq!(g[60], 90.0);
        assert_eq!(g[1] - g[0], 3.0);
    }

    #[test]
    fn calibration_examples() {
        let step = calibrate_step(6, from_db(15.0), 1.0);
        assert!((step - 0.17573).abs() < 1e-4, "step {step}");
        assert_eq!(calibrate_step(1, 1.0, 1.0), 1.0);
    }

    #[test]
    fn calibration_round_trip() {
        let cfg = ExperimentConfig::default();
        for &m in &[1usize, 10, 100] {
            let step = cfg.step_for(m, cfg.bits);
            let a = predict_dithered(m, step, cfg.signal_power);
            let b = predict_dithered_from_resolution(m, cfg.bits, cfg.peak2rms_linear());
            assert!((a - b).abs() < 1e-12 * b, "M={m}: {a} vs {b}");
        }
    }

    #[test]
    fn signal_statistics() {
        let space = RngSpace::new(11);
        let power = 1.7;
        let n = 1_000_000;
        let samples = generate_user_signal(n, power, &space);
        let var = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
        assert!((var - power).abs() / power < 0.01, "var {var}");
        let mre = samples.iter().map(|s| s.re).sum::<f64>() / n as f64;
        let mim = samples.iter().map(|s| s.im).sum::<f64>() / n as f64;
        let cross = samples.iter().map(|s| s.re * s.im).sum::<f64>() / n as f64;
        let rho = (cross - mre * mim) / (power / 2.0);
        assert!(rho.abs() < 3.0 / (n as f64).sqrt() * 2.0, "rho {rho}");
    }

    #[test]
    fn signal_is_seed_deterministic() {
        let a = generate_user_signal(512, 1.0, &RngSpace::new(21));
        let b = generate_user_signal(512, 1.0, &RngSpace::new(21));
        assert_eq!(a, b);
        let c = generate_user_signal(512, 1.0, &RngSpace::new(22));
        assert_ne!(a, c);
    }

    #[test]
    fn chain_parallel_equals_sequential() {
        let cfg = ExperimentConfig {
            antennas: 8,
            samples: 500,
            ..Default::default()
        };
        let par = simulate_chain(&cfg, 0.4, true).unwrap();
        let seq = simulate_chain_seq(&cfg, 0.4, true).unwrap();
        assert_eq!(par.empirical_evm.to_bits(), seq.empirical_evm.to_bits());
        assert_eq!(par.clipped_samples, seq.clipped_samples);
    }

    #[test]
    fn single_antenna_penalty_about_3db() {
        let cfg = ExperimentConfig {
            antennas: 1,
            samples: 20_000,
            ..Default::default()
        };
        let conv = simulate_chain(&cfg, 0.0, false).unwrap();
        let dith = simulate_chain(&cfg, 0.0, true).unwrap();
        let gap = dith.empirical_evm_db - conv.empirical_evm_db;
        assert!((gap - 3.01).abs() < 0.5, "gap {gap} dB");
    }

    #[test]
    fn dithered_evm_decreases_with_bits() {
        let mut prev = f64::INFINITY;
        for bits in 2..=8 {
            let cfg = ExperimentConfig {
                antennas: 10,
                bits,
                samples: 4000,
                ..Default::default()
            };
            let evm = simulate_chain(&cfg, 0.0, true).unwrap().empirical_evm;
            assert!(evm < prev, "bits {bits}: {evm} !< {prev}");
            prev = evm;
        }
    }

    #[test]
    fn clip_accounting_is_negligible_at_headroom() {
        let cfg = ExperimentConfig {
            antennas: 32,
            samples: 10_000,
            ..Default::default()
        };
        let rep = simulate_chain(&cfg, 0.2, true).unwrap();
        let rate = rep.clipped_samples as f64 / (2.0 * 32.0 * 10_000.0);
        assert!(rate < 1e-6, "clip rate {rate}");
    }

    #[test]
    fn config_validation_names_offending_key() {
        let bad = ExperimentConfig {
            samples: 0,
            ..Default::default()
        };
        let err = bad.validate().unwrap_err().to_string();
        assert!(err.contains("samples"), "{err}");
        let bad = ExperimentConfig {
            angle_grid_deg: vec![120.0],
            ..Default::default()
        };
        assert!(bad
            .validate()
            .unwrap_err()
            .to_string()
            .contains("angle_grid_deg"));
    }

    #[test]
    fn validation_suite_passes_on_defaults() {
        let cfg = ExperimentConfig::default();
        let report = validation_suite(&cfg).unwrap();
        for c in &report.checks {
            assert!(
                c.passed,
                "{}: {} (stat {}, thr {})",
                c.name, c.detail, c.statistic, c.threshold
            );
        }
        assert!(report.all_passed());
    }
}
