mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use solenoid::Error;

use commands::Outcome;

#[derive(Parser)]
#[command(name = "solenoid", version, about = "Uniquely ergodic solenoids on flat tori and their currents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config; defaults are used for anything left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Denjoy map diagnostics: rotation number, invariant measure, Birkhoff spread.
    Denjoy,
    /// Solenoid realizing a homology class, with its current.
    Realize,
    /// Normalized long-leaf currents against the solenoid current.
    LeafLimit,
    /// Level-set solenoid of a scalar field and its error certificate.
    Levelset,
    /// Approximation of class plus exact part by one glued solenoid.
    Approximate,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Output(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Run(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Output(_) => 2,
            Self::Run(e) => match e {
                Error::RationalRotation(..)
                | Error::RotationOutOfRange(_)
                | Error::GapsExhaustCircle(_)
                | Error::InvalidSchedule(_)
                | Error::DepthExceedsSchedule { .. }
                | Error::InvalidArgument(_)
                | Error::MassesDoNotSumToOne(_)
                | Error::DictionaryMismatch(_)
                | Error::NotACover(_)
                | Error::NullClass => 2,
                _ => 1,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Output(m) => write!(f, "output error: {m}"),
            Self::Run(e) => write!(f, "{e}"),
        }
    }
}

fn set_threads(n: usize) -> Result<(), CliError> {
    #[cfg(feature = "parallel")]
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn write_outputs(dir: &Path, outcome: &Outcome) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    for (name, body) in &outcome.files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    set_threads(cli.threads)?;
    let verbose = cli.verbose;
    let log = move |m: &str| {
        if verbose {
            eprintln!("solenoid: {m}");
        }
    };
    let cfg = cli.config.as_deref();
    let outcome = match cli.command {
        Command::Denjoy => commands::denjoy(&config::load(cfg)?, &log)?,
        Command::Realize => commands::realize(&config::load(cfg)?, &log)?,
        Command::LeafLimit => commands::leaf_limit(&config::load(cfg)?, &log)?,
        Command::Levelset => commands::levelset(&config::load(cfg)?, &log)?,
        Command::Approximate => commands::approximate(&config::load(cfg)?, &log)?,
    };
    write_outputs(&cli.out, &outcome)?;
    for (name, _) in &outcome.files {
        log(&format!("wrote {}", cli.out.join(name).display()));
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) if o.pass => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("solenoid: invariant check failed; see {}", cli.out.display());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("solenoid: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
