//! `lmdan`: generate drifted blob benchmarks, train LMDAN and its baselines,
//! run drift sweeps and the oracle verification suite.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "lmdan", version, about = "Label-distribution matching for adversarial domain adaptation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write pre- and post-drift source/target feature CSVs and a manifest.
    Gen(CommonArgs),
    /// Train one method and write its run report.
    Train(CommonArgs),
    /// Train every (method, alpha, rate, seed) cell and write tidy CSV tables.
    Sweep(CommonArgs),
    /// Run the oracle checks; exits 1 if any fails.
    Verify(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// lmdan, dann or source_only; a comma-separated list for `sweep`.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated drop rates. `gen` and `train` use a single value as [r;r].
    #[arg(long)]
    rates: Option<String>,
    /// Class-count exponent; a comma-separated list for `sweep`.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
}

/// Failure with the process exit status it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input paths: exit status 2.
    Usage(String),
    /// Anything that went wrong while computing or writing results: exit status 1.
    Failed(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn failed(msg: impl Into<String>) -> Self {
        CliError::Failed(msg.into())
    }
}

impl From<lmdan::Error> for CliError {
    fn from(e: lmdan::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

fn parse_list<T: std::str::FromStr>(flag: &str, text: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|e| CliError::usage(format!("--{flag} {v:?}: {e}"))))
        .collect()
}

fn single<T: Copy>(flag: &str, values: &[T]) -> Result<T, CliError> {
    match values {
        [v] => Ok(*v),
        _ => Err(CliError::usage(format!("--{flag} takes a single value for this command"))),
    }
}

fn resolve(args: &CommonArgs, sweep: bool) -> Result<config::ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => config::ExperimentConfig::load(path)?,
        None => config::ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(m) = &args.method {
        let methods = parse_list::<lmdan::trainer::Method>("method", m)?;
        if sweep {
            cfg.methods = methods;
        } else {
            cfg.method = single("method", &methods)?;
        }
    }
    if let Some(r) = &args.rates {
        let rates = parse_list::<f64>("rates", r)?;
        if sweep {
            cfg.rates = rates;
        } else {
            let rate = single("rates", &rates)?;
            cfg.source_drop_rate = rate;
            cfg.target_drop_rate = rate;
        }
    }
    if let Some(a) = &args.alpha {
        let alphas = parse_list::<f64>("alpha", a)?;
        if sweep && alphas.len() > 1 {
            cfg.alphas = alphas;
        } else {
            cfg.alpha = single("alpha", &alphas)?;
            if sweep {
                cfg.alphas.clear();
            }
        }
    }
    if let Some(l) = args.lambda {
        cfg.lambda = l;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(args) => commands::gen(&resolve(&args, false)?),
        Command::Train(args) => {
            let cfg = resolve(&args, false)?;
            if cfg.method == lmdan::trainer::Method::SourceOnly && args.lambda.is_some() {
                eprintln!("warning: --lambda is ignored by source_only training");
            }
            commands::train(&cfg)
        }
        Command::Sweep(args) => {
            let cfg = resolve(&args, true)?;
            if cfg.seeds.is_empty() || cfg.rates.is_empty() || cfg.methods.is_empty() {
                return Err(CliError::usage("sweep needs at least one seed, rate and method"));
            }
            commands::sweep(&cfg)
        }
        Command::Verify(args) => commands::verify(&resolve(&args, false)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
