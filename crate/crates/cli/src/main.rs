use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hypocalc::Error;

mod commands;
mod config;

use config::RunConfig;

/// Symbol calculus, parametrix and functional calculus reports.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config; default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the symbol validation samples.
    #[arg(long, global = true, default_value_t = hypocalc::dsl::VALIDATION_SEED)]
    seed: u64,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Spectral check and hypoellipticity constants -> hypo_report.csv
    Check,
    /// Parametrix remainder sweep and empirical R -> parametrix_sweep.csv
    Parametrix,
    /// f(a) against the dense reference for the function family -> fcalc_report.csv
    Calc,
    /// Imaginary powers over a t-sweep -> imaginary_powers.csv
    Bip,
}

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Check(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Check(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Singular { .. }
            | Error::LambdaInOmega { .. }
            | Error::NoConvergence(_)
            | Error::Contour(_) => Failure::Numerical(e.to_string()),
            e => Failure::Config(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<Error>() {
            Ok(e) => e.into(),
            Err(e) => Failure::Config(format!("{e:#}")),
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Config("--config PATH is required".into()))?;
    let cfg = RunConfig::load(path)?;
    let out = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::Check => commands::check(&cfg, &out, cli.seed),
        Command::Parametrix => commands::parametrix_sweep(&cfg, &out, cli.seed),
        Command::Calc => commands::calc(&cfg, &out, cli.seed),
        Command::Bip => commands::bip(&cfg, &out, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
