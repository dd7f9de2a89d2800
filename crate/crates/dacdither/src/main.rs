//! Command-line front end: reproduce the EVM sweeps and equivalent-model
//! diagnostics as CSV tables plus a run manifest.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dacdither::cli::{
    resolve_config, run_angle_sweep, run_noise_stats, run_resolution_sweep, run_transfer_function,
    run_validate, Overrides, RunOutputs, OUT_DIR_ENV,
};
use dacdither::montecarlo::DitherFamily;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DitherArg {
    None,
    Uniform,
    Gaussian,
    Triangular,
}

impl From<DitherArg> for DitherFamily {
    fn from(v: DitherArg) -> Self {
        match v {
            DitherArg::None => DitherFamily::None,
            DitherArg::Uniform => DitherFamily::Uniform,
            DitherArg::Gaussian => DitherFamily::Gaussian,
            DitherArg::Triangular => DitherFamily::Triangular,
        }
    }
}

/// Low-resolution DAC array simulator with digital dithering.
#[derive(Debug, Parser)]
#[command(name = "dacdither", version, about)]
struct Cli {
    /// TOML config file; flags override file values, file values override
    /// defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for tables and manifests
    /// (default: $DACDITHER_OUT or the current directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Worker thread count (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Array size M.
    #[arg(long, global = true)]
    antennas: Option<usize>,

    /// DAC resolution N in bits.
    #[arg(long, global = true)]
    bits: Option<u32>,

    /// Full-scale power over input RMS power, dB.
    #[arg(long, global = true)]
    peak2rms_db: Option<f64>,

    /// Monte Carlo trials per experiment point.
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Master seed for all random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Dither PDF family.
    #[arg(long, global = true, value_enum)]
    dither: Option<DitherArg>,

    /// Dither parameter in units of the quantization step.
    #[arg(long, global = true)]
    dither_scale: Option<f64>,

    /// Complex variance of the user signal.
    #[arg(long, global = true)]
    signal_power: Option<f64>,

    /// Use the published experiment scale (M = 1000; resolution sweep over
    /// M in {1000, 10000}) instead of the desk-scale defaults.
    #[arg(long, global = true)]
    paper_scale: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// EVM versus departure angle, conventional and dithered.
    AngleSweep,
    /// Worst-case (broadside) EVM over the (M, N) grid.
    ResolutionSweep,
    /// Staircase and equivalent transfer function of one DAC.
    TransferFunction,
    /// Equivalent-noise statistics across two dithered antennas.
    NoiseStats,
    /// Run all statistical and algebraic checks; nonzero exit on failure.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let overrides = Overrides {
        antennas: cli.antennas,
        bits: cli.bits,
        peak2rms_db: cli.peak2rms_db,
        samples: cli.samples,
        master_seed: cli.seed,
        dither_family: cli.dither.map(Into::into),
        dither_scale: cli.dither_scale,
        signal_power: cli.signal_power,
        paper_scale: cli.paper_scale,
    };
    let cfg = resolve_config(cli.config.as_deref(), &overrides)?;
    let out_dir = cli
        .out_dir
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;

    let report = |outputs: &RunOutputs| {
        println!("wrote {}", outputs.table.display());
        println!("wrote {}", outputs.manifest.display());
    };

    let command = cli.command;
    let exec = move || -> anyhow::Result<ExitCode> {
        match command {
            Command::AngleSweep => {
                report(&run_angle_sweep(&cfg, &out_dir)?);
                Ok(ExitCode::SUCCESS)
            }
            Command::ResolutionSweep => {
                report(&run_resolution_sweep(&cfg, &out_dir)?);
                Ok(ExitCode::SUCCESS)
            }
            Command::TransferFunction => {
                report(&run_transfer_function(&cfg, &out_dir)?);
                Ok(ExitCode::SUCCESS)
            }
            Command::NoiseStats => {
                report(&run_noise_stats(&cfg, &out_dir)?);
                Ok(ExitCode::SUCCESS)
            }
            Command::Validate => {
                let (validation, outputs) = run_validate(&cfg, &out_dir)?;
                for c in &validation.checks {
                    println!(
                        "{} {}: {}",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.name,
                        c.detail
                    );
                }
                report(&outputs);
                if validation.all_passed() {
                    Ok(ExitCode::SUCCESS)
                } else {
                    Ok(ExitCode::from(1))
                }
            }
        }
    };

    #[cfg(feature = "parallel")]
    {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(workers) = cli.workers {
            builder = builder.num_threads(workers);
        }
        builder.build()?.install(exec)
    }
    #[cfg(not(feature = "parallel"))]
    {
        if let Some(workers) = cli.workers {
            if workers > 1 {
                eprintln!("note: built without the parallel feature; --workers {workers} ignored");
            }
        }
        exec()
    }
}
