//! Command-line runner for spinbath experiments.
//!
//! Exit codes: 0 success, 1 configuration or parse error, 2 runtime or
//! numerical error, 3 I/O error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spinbath::config::OutputFormat;
use spinbath::output::{emit_plot_data, to_csv, to_json};
use spinbath::{run_experiment, EnsembleMethod, Error, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "spinbath", version, about = "Simulate qubit experiments in a structured dephasing bath")]
struct Args {
    /// Experiment configuration (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output file; overrides the config. Without one, results go to stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// csv, json or both; overrides the config.
    #[arg(long, value_name = "FORMAT")]
    format: Option<String>,

    /// Seed for Monte Carlo sampling and shot noise.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// quadrature:N, mc:N or mc:N:SEED; overrides the config.
    #[arg(long, value_name = "METHOD")]
    method: Option<String>,

    /// Replace finite pulses by instantaneous rotations.
    #[arg(long)]
    ideal_pulses: bool,
}

fn apply_overrides(cfg: &mut ExperimentConfig, args: &Args) -> spinbath::Result<()> {
    if let Some(out) = &args.out {
        cfg.output.path = Some(out.clone());
    }
    if let Some(f) = &args.format {
        cfg.output.format = f.parse()?;
    }
    if let Some(m) = &args.method {
        cfg.method = m.parse::<EnsembleMethod>()?;
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if args.ideal_pulses {
        cfg.ideal_pulses = true;
    }
    if cfg.output.path.is_none() && cfg.output.format == OutputFormat::Both {
        return Err(Error::Config("--format both needs an output path".into()));
    }
    Ok(())
}

/// Setup failures keep their own exit code; anything after validation is a
/// runtime failure (2) unless it is I/O (3).
enum Failure {
    Setup(Error),
    Runtime(Error),
}

impl Failure {
    fn error(&self) -> &Error {
        match self {
            Failure::Setup(e) | Failure::Runtime(e) => e,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Setup(e) => e.exit_code() as u8,
            Failure::Runtime(e @ Error::Io { .. }) => e.exit_code() as u8,
            Failure::Runtime(_) => 2,
        }
    }
}

fn run(args: &Args) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::from_path(&args.config).map_err(Failure::Setup)?;
    apply_overrides(&mut cfg, args).map_err(Failure::Setup)?;
    cfg.validate().map_err(Failure::Setup)?;
    let result = run_experiment(&cfg).map_err(Failure::Runtime)?;
    write_result(&cfg, &result).map_err(Failure::Runtime)
}

fn write_result(cfg: &ExperimentConfig, result: &spinbath::ExperimentResult) -> spinbath::Result<()> {
    match &cfg.output.path {
        Some(path) => {
            for f in emit_plot_data(result, path, cfg.output.format)? {
                eprintln!("wrote {}", f.display());
            }
        }
        None => {
            let text = match cfg.output.format {
                OutputFormat::Json => to_json(result),
                _ => to_csv(result),
            };
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|source| Error::Io { path: "<stdout>".into(), source })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let e = f.error();
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(f.exit_code())
        }
    }
}
