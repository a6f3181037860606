//! `kitwpa`: dispersion, gain, compression, ripple and noise calibration
//! runs driven by a TOML configuration.

mod commands;
mod config;
mod error;
mod manifest;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use kitwpa_core::{RippleConvention, ToneMode};

use commands::{Ctx, Options};
use config::RunConfig;
use error::CliError;
use manifest::{sha256_hex, Outputs, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "kitwpa", version, about = "Kinetic-inductance TWPA simulation and noise calibration")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Device preset (overrides `device.preset`).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Comma-separated pump frequencies in Hz.
    #[arg(long, global = true, value_delimiter = ',')]
    pump_sweep: Vec<f64>,
    /// Tone set for the coupled-mode solver.
    #[arg(long, global = true)]
    mode: Option<ToneMode>,
    /// Denominator convention of the reflection-ripple model.
    #[arg(long, global = true)]
    ripple_convention: Option<RippleConvention>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bloch dispersion table and stopbands.
    Dispersion,
    /// Phase-matched signal, idler and around-pump bands.
    Bands,
    /// Small-signal gain curve(s).
    Gain,
    /// Gain against input power and 1 dB compression.
    Compress,
    /// Transmission ripple from end reflections.
    Ripple,
    /// Noise calibration.
    Noise {
        #[command(subcommand)]
        action: NoiseAction,
    },
    /// Fit the characteristic current to stopband shifts.
    FitIstar,
}

#[derive(Debug, Subcommand)]
enum NoiseAction {
    /// Added noise from hot/cold, bypass, pump-off and gain traces.
    Extract,
    /// Synthetic traces from the configured chain.
    Synth,
    /// HEMT noise from unpumped hot/cold traces.
    Hemt,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Dispersion => "dispersion",
            Self::Bands => "bands",
            Self::Gain => "gain",
            Self::Compress => "compress",
            Self::Ripple => "ripple",
            Self::Noise { action: NoiseAction::Extract } => "noise extract",
            Self::Noise { action: NoiseAction::Synth } => "noise synth",
            Self::Noise { action: NoiseAction::Hemt } => "noise hemt",
            Self::FitIstar => "fit-istar",
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<(RunConfig, Option<String>), CliError> {
    let Some(path) = path else {
        return Ok((RunConfig::default(), None));
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config("--config", format!("cannot read '{}': {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text).map_err(|e| CliError::config("--config", e))?;
    cfg.resolve_paths(path.parent().unwrap_or_else(|| std::path::Path::new(".")));
    Ok((cfg, Some(text)))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let (mut cfg, text) = load_config(&cli.config)?;
    if let Some(p) = &cli.preset {
        cfg.device.preset = Some(p.clone());
    }
    let mode = match (cli.mode, &cfg.sweep.mode) {
        (Some(m), _) => m,
        (None, Some(s)) => s.parse().map_err(|e| CliError::config("sweep.mode", e))?,
        (None, None) => ToneMode::Six,
    };
    let ripple_convention = match (cli.ripple_convention, &cfg.ripple.convention) {
        (Some(c), _) => c,
        (None, Some(s)) => s.parse().map_err(|e| CliError::config("ripple.convention", e))?,
        (None, None) => RippleConvention::default(),
    };
    let pump_sweep = if cli.pump_sweep.is_empty() {
        cfg.sweep.pump_sweep.clone().unwrap_or_default()
    } else {
        cli.pump_sweep.clone()
    };
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut ctx = Ctx {
        cfg,
        opts: Options {
            mode,
            ripple_convention,
            pump_sweep,
        },
        out: Outputs::new(&out_dir),
        inputs: Vec::new(),
        warnings: Vec::new(),
        device: None,
    };
    match &cli.command {
        Command::Dispersion => commands::dispersion(&mut ctx)?,
        Command::Bands => commands::bands(&mut ctx)?,
        Command::Gain => commands::gain(&mut ctx)?,
        Command::Compress => commands::compress(&mut ctx)?,
        Command::Ripple => commands::ripple(&mut ctx)?,
        Command::Noise { action } => match action {
            NoiseAction::Extract => commands::noise_extract(&mut ctx)?,
            NoiseAction::Synth => commands::noise_synth(&mut ctx)?,
            NoiseAction::Hemt => commands::noise_hemt(&mut ctx)?,
        },
        Command::FitIstar => commands::fit_istar_cmd(&mut ctx)?,
    }
    for w in &ctx.warnings {
        eprintln!("warning: {w}");
    }
    let manifest = RunManifest {
        toolkit: "kitwpa",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().to_string(),
        options: serde_json::to_value(&ctx.opts).map_err(std::io::Error::other)?,
        config_path: cli.config.clone(),
        config_sha256: text.as_ref().map(|t| sha256_hex(t.as_bytes())),
        config_text: text,
        resolved: serde_json::json!({ "config": ctx.cfg, "device": ctx.device }),
        inputs: ctx.inputs,
        outputs: ctx.out.written.clone(),
        warnings: ctx.warnings,
        duration_s: started.elapsed().as_secs_f64(),
    };
    let mut s = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    s.push('\n');
    fs::create_dir_all(&ctx.out.dir)?;
    fs::write(ctx.out.dir.join("manifest.json"), s)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
