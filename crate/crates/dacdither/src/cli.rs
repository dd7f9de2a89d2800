//! Config resolution, table emission, and subcommand runners for the
//! `dacdither` binary.
//!
//! Precedence is flags over config file over defaults. Tables are
//! comma-delimited with a header row, floating values printed to 9
//! significant digits, and dB columns suffixed `_db`; every run also writes a
//! manifest recording the fully resolved config so the analytic columns can
//! be recomputed offline. A run with the same manifest produces byte-identical
//! tables.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dither::{
    equivalent_noise, noise_property_test, transfer_function_closed_form_uniform,
    transfer_function_numeric, DitherSpec, EquivalentNoiseStats,
};
use crate::montecarlo::{
    angle_sweep, draw_cscg, resolution_sweep, validation_suite, DitherFamily, ExperimentConfig,
    SweepRow, ValidationReport,
};
use crate::quantizer::{quantize_real, QuantizerConfig};
use crate::rng::{RngSpace, StreamRole};
use crate::{Error, Result};

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "DACDITHER_OUT";

/// Flag-level overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub antennas: Option<usize>,
    pub bits: Option<u32>,
    pub peak2rms_db: Option<f64>,
    pub samples: Option<usize>,
    pub master_seed: Option<u64>,
    pub dither_family: Option<DitherFamily>,
    pub dither_scale: Option<f64>,
    pub signal_power: Option<f64>,
    /// Switch sweep defaults from desk scale to the published scale
    /// (M = 1000 for angle sweeps, M in {1000, 10000} for resolution sweeps).
    pub paper_scale: bool,
}

/// Load the optional config file and fold in the overrides; the result is
/// validated. Unknown config keys are rejected.
pub fn resolve_config(
    config_path: Option<&Path>,
    overrides: &Overrides,
) -> Result<ExperimentConfig> {
    let mut cfg = match config_path {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            toml::from_str::<ExperimentConfig>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if overrides.paper_scale {
        cfg.antennas = 1000;
        cfg.m_grid = vec![1000, 10_000];
    }
    if let Some(v) = overrides.antennas {
        cfg.antennas = v;
    }
    if let Some(v) = overrides.bits {
        cfg.bits = v;
    }
    if let Some(v) = overrides.peak2rms_db {
        cfg.peak2rms_db = v;
    }
    if let Some(v) = overrides.samples {
        cfg.samples = v;
    }
    if let Some(v) = overrides.master_seed {
        cfg.master_seed = v;
    }
    if let Some(v) = overrides.dither_family {
        cfg.dither_family = v;
    }
    if let Some(v) = overrides.dither_scale {
        cfg.dither_scale = v;
    }
    if let Some(v) = overrides.signal_power {
        cfg.signal_power = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Format with 9 significant digits, fixed notation.
pub fn fmt_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (8 - exp).clamp(0, 17) as usize;
    format!("{v:.decimals$}")
}

/// Manifest written next to every output table.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub timestamp: String,
    pub master_seed: u64,
    pub outputs: Vec<String>,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig, outputs: Vec<String>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            master_seed: config.master_seed,
            outputs,
            config: config.clone(),
        }
    }
}

/// Write atomically: a failed write never leaves a partial file behind.
fn write_file(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    fs::write(&tmp, contents).map_err(io_err)?;
    if let Err(source) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(source));
    }
    Ok(())
}

fn write_manifest(
    out_dir: &Path,
    name: &str,
    cfg: &ExperimentConfig,
    outputs: &[PathBuf],
) -> Result<PathBuf> {
    let manifest = RunManifest::new(
        cfg,
        outputs.iter().map(|p| p.display().to_string()).collect(),
    );
    let text = toml::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
    let path = out_dir.join(format!("{name}_manifest.toml"));
    write_file(&path, &text)?;
    Ok(path)
}

/// CSV text for a sweep table.
pub fn sweep_table_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "angle_deg,antennas,bits,evm_conventional_db,evm_dithered_db,evm_analytic_db,clipped_samples,samples\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt_sig9(r.angle_deg),
            r.antennas,
            r.bits,
            fmt_sig9(r.evm_conventional_db),
            fmt_sig9(r.evm_dithered_db),
            fmt_sig9(r.evm_analytic_db),
            r.clipped_samples,
            r.samples,
        ));
    }
    out
}

/// CSV text for a transfer-function table.
pub fn transfer_table_csv(grid: &[f64], staircase: &[f64], equivalent: &[f64]) -> String {
    let mut out = String::from("input,staircase_output,dithered_equivalent\n");
    for ((x, s), f) in grid.iter().zip(staircase).zip(equivalent) {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_sig9(*x),
            fmt_sig9(*s),
            fmt_sig9(*f)
        ));
    }
    out
}

/// CSV text for equivalent-noise statistics.
pub fn noise_stats_csv(stats: &EquivalentNoiseStats) -> String {
    let mut out = String::from("statistic,value\n");
    let mut row = |name: &str, v: f64| out.push_str(&format!("{name},{}\n", fmt_sig9(v)));
    row("sample_count", stats.sample_count as f64);
    row("mean_re", stats.mean.re);
    row("mean_im", stats.mean.im);
    row("variance", stats.variance);
    row("input_correlation_re", stats.input_correlation.re);
    row("input_correlation_im", stats.input_correlation.im);
    row("pairwise_correlation_re", stats.pairwise_correlation.re);
    row("pairwise_correlation_im", stats.pairwise_correlation.im);
    row("mean_z", stats.mean_z);
    row("input_correlation_z", stats.input_correlation_z);
    row("pairwise_correlation_z", stats.pairwise_correlation_z);
    out
}

/// CSV text for a validation report.
pub fn validation_csv(report: &ValidationReport) -> String {
    let mut out = String::from("check,passed,statistic,threshold,detail\n");
    for c in &report.checks {
        out.push_str(&format!(
            "{},{},{},{},\"{}\"\n",
            c.name,
            c.passed,
            fmt_sig9(c.statistic),
            fmt_sig9(c.threshold),
            c.detail.replace('"', "'"),
        ));
    }
    out
}

/// Files produced by a subcommand run.
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub table: PathBuf,
    pub manifest: PathBuf,
}

pub fn run_angle_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutputs> {
    let rows = angle_sweep(cfg)?;
    let table = out_dir.join("angle_sweep.csv");
    write_file(&table, &sweep_table_csv(&rows))?;
    let manifest = write_manifest(out_dir, "angle_sweep", cfg, std::slice::from_ref(&table))?;
    Ok(RunOutputs { table, manifest })
}

pub fn run_resolution_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutputs> {
    let rows = resolution_sweep(cfg)?;
    let table = out_dir.join("resolution_sweep.csv");
    write_file(&table, &sweep_table_csv(&rows))?;
    let manifest = write_manifest(
        out_dir,
        "resolution_sweep",
        cfg,
        std::slice::from_ref(&table),
    )?;
    Ok(RunOutputs { table, manifest })
}

/// Staircase and equivalent transfer function on a dense grid over the DAC
/// dynamic range, in units where the quantization step is 1.
pub fn run_transfer_function(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutputs> {
    let qcfg = QuantizerConfig::new(cfg.bits, 1.0)?;
    let spec = cfg.dither_spec(qcfg.step);
    let (lo, hi) = qcfg.dynamic_range();
    let points = 512usize;
    let grid: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / points as f64)
        .collect();
    let mut clips = 0u64;
    let staircase: Vec<f64> = grid
        .iter()
        .map(|&x| quantize_real(x, &qcfg, &mut clips))
        .collect::<Result<_>>()?;
    let equivalent = match spec {
        DitherSpec::UniformSymmetric { width } if (width - qcfg.step).abs() <= 1e-12 => {
            transfer_function_closed_form_uniform(&grid, &spec, &qcfg)?.values
        }
        _ => transfer_function_numeric(&grid, &spec, &qcfg)?.values,
    };
    let table = out_dir.join("transfer_function.csv");
    write_file(&table, &transfer_table_csv(&grid, &staircase, &equivalent))?;
    let manifest = write_manifest(
        out_dir,
        "transfer_function",
        cfg,
        std::slice::from_ref(&table),
    )?;
    Ok(RunOutputs { table, manifest })
}

/// Equivalent-noise statistics across two independently dithered antennas
/// fed the same desired signal.
pub fn run_noise_stats(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutputs> {
    let samples = cfg.samples.max(10_000);
    let antennas = cfg.antennas.max(2);
    let step = cfg.step_for(antennas, cfg.bits);
    let qcfg = QuantizerConfig::new(cfg.bits, step)?;
    let spec = cfg.dither_spec(step);
    if matches!(spec, DitherSpec::None) {
        return Err(Error::UnsupportedConfiguration(
            "noise-stats requires a dithered configuration".into(),
        ));
    }
    let space = RngSpace::new(cfg.master_seed);
    let per_antenna_power = cfg.per_antenna_power(antennas);
    let mut inputs = Vec::with_capacity(samples);
    let mut na = Vec::with_capacity(samples);
    let mut nb = Vec::with_capacity(samples);
    let mut clips = 0u64;
    for t in 0..samples as u64 {
        let mut sig = space.stream(t, 0, StreamRole::Signal);
        let x = draw_cscg(&mut sig, per_antenna_power);
        let mut ra = space.stream(t, 0, StreamRole::Dither);
        let mut rb = space.stream(t, 1, StreamRole::Dither);
        inputs.push(x);
        na.push(equivalent_noise(x, &spec, &qcfg, &mut ra, &mut clips)?.value);
        nb.push(equivalent_noise(x, &spec, &qcfg, &mut rb, &mut clips)?.value);
    }
    let stats = noise_property_test(&inputs, &na, &nb)?;
    let table = out_dir.join("noise_stats.csv");
    write_file(&table, &noise_stats_csv(&stats))?;
    let manifest = write_manifest(out_dir, "noise_stats", cfg, std::slice::from_ref(&table))?;
    Ok(RunOutputs { table, manifest })
}

pub fn run_validate(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(ValidationReport, RunOutputs)> {
    let report = validation_suite(cfg)?;
    let table = out_dir.join("validation.csv");
    write_file(&table, &validation_csv(&report))?;
    let manifest = write_manifest(out_dir, "validation", cfg, std::slice::from_ref(&table))?;
    Ok((report, RunOutputs { table, manifest }))
}
