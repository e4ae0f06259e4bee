//! `ylyap`: batch experiments on linear Young differential equations.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] ylyap::Error),
}

#[derive(Parser, Debug)]
#[command(name = "ylyap", version, about = "Flows, Lyapunov spectra and regularity of linear Young differential equations")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; falls back to `output.dir` in the config, then `ylyap-out`.
    #[arg(long, global = true, env = "YLYAP_OUT_DIR")]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Young integral of C against the driver, with the Young–Loève check.
    Integrate,
    /// Picard solve of the vector equation.
    Solve,
    /// Discrete-time Lyapunov spectrum.
    Spectrum,
    /// Triangular oracle spectrum compared with the numerical spectrum.
    Oracle,
    /// Nonregularity coefficient and Perron defects.
    Regularity,
    /// Empirical (H3), (H3') and (H4) series of the driver.
    Assumptions,
    /// Spectrum over an ensemble of fBm drivers.
    Ensemble,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let Some(path) = &cli.config else {
        return Err(CliError::Config(vec!["--config: a configuration file is required".into()]));
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = config::ExperimentConfig::from_toml(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let base = path.parent().map(PathBuf::from).unwrap_or_default();
    let errs = cfg.validate(&base);
    if !errs.is_empty() {
        return Err(CliError::Config(errs));
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config(vec!["--threads: must be at least 1".into()]));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let out = cli.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("ylyap-out"));
    std::fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let resolved = out.join("config.resolved.toml");
    std::fs::write(&resolved, cfg.to_toml()).map_err(|e| CliError::Io(format!("{}: {e}", resolved.display())))?;
    let ctx = commands::Context { cfg, base, out };
    let written = match cli.command {
        Command::Integrate => commands::integrate(&ctx),
        Command::Solve => commands::solve(&ctx),
        Command::Spectrum => commands::spectrum(&ctx),
        Command::Oracle => commands::oracle(&ctx),
        Command::Regularity => commands::regularity(&ctx),
        Command::Assumptions => commands::assumptions(&ctx),
        Command::Ensemble => commands::ensemble(&ctx),
    }?;
    for f in written {
        println!("{}", f.display());
    }
    Ok(())
}
