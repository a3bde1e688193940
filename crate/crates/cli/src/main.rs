use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use erds::presets;
use erds::scenario::{ConfigError, RunConfig};

mod commands;
mod output;

#[derive(Parser)]
#[command(name = "erds", version, about = "Entropy-variable solver for energy-reaction-diffusion systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH", conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Use a shipped preset instead of a file (see `erds presets`).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory; defaults to output.dir from the config, else ./erds-out/<name>.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for randomized checks; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the structural hypotheses, identities, (R1) and reaction growth.
    Check {
        #[command(flatten)]
        common: Common,
        /// Random samples per check (coercivity uses ten times as many).
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Run the scheme to the configured horizon and write trajectory files.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Skip the hypothesis check that normally gates the run.
        #[arg(long)]
        no_check: bool,
    },
    /// Run once per parameter value and compare the results.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values, at least two.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
    },
    /// Step until the discrete time derivative falls below a threshold.
    Equilibrate {
        #[command(flatten)]
        common: Common,
        /// Stop once max|Z^k - Z^{k-1}|/tau is below this.
        #[arg(long, default_value_t = 1e-8)]
        threshold: f64,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: usize,
    },
    /// List the shipped presets, or print one.
    Presets {
        #[arg(long, value_name = "NAME")]
        show: Option<String>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Tau,
    Eps,
    Delta,
    Rho,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tau => "tau",
            Self::Eps => "eps",
            Self::Delta => "delta",
            Self::Rho => "rho",
        }
    }
}

/// Failure categories mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Config(ConfigError),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Self::Other(e)
    }
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), Failure> {
    let text = match (&common.config, &common.preset) {
        (Some(path), _) => std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        (None, Some(name)) => match presets::source(name) {
            Some(s) => s.to_string(),
            None => {
                return Err(Failure::Other(anyhow::anyhow!(
                    "unknown preset {name:?}; available: {}",
                    presets::names().collect::<Vec<_>>().join(", ")
                )))
            }
        },
        (None, None) => return Err(Failure::Other(anyhow::anyhow!("--config or --preset is required"))),
    };
    let mut cfg = RunConfig::from_toml(&text).map_err(Failure::Config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("erds-out").join(&cfg.name));
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Check { common, samples } => {
            let (cfg, out) = load(&common)?;
            let write = common.out.is_some() || cfg.output.dir.is_some();
            Ok(commands::check(&cfg, samples, write.then_some(out.as_path()))?)
        }
        Command::Simulate { common, no_check } => {
            let (cfg, out) = load(&common)?;
            Ok(commands::simulate(&cfg, &out, !no_check)?)
        }
        Command::Sweep { common, param, values } => {
            let (cfg, out) = load(&common)?;
            if values.len() < 2 {
                return Err(Failure::Other(anyhow::anyhow!("a sweep needs at least two values")));
            }
            Ok(commands::sweep(&cfg, &out, param, &values)?)
        }
        Command::Equilibrate { common, threshold, max_steps } => {
            let (cfg, out) = load(&common)?;
            Ok(commands::equilibrate(&cfg, &out, threshold, max_steps)?)
        }
        Command::Presets { show } => {
            match show {
                Some(name) => match presets::source(&name) {
                    Some(s) => print!("{s}"),
                    None => return Err(Failure::Other(anyhow::anyhow!("unknown preset {name:?}"))),
                },
                None => presets::names().for_each(|n| println!("{n}")),
            }
            Ok(true)
        }
    }
}

fn threads() -> Result<usize> {
    match std::env::var("ERDS_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => bail!("ERDS_THREADS must be a positive integer, got {v:?}"),
        },
        Err(_) => Ok(0),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = threads().and_then(|n| Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?));
    if let Err(e) = pool {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
