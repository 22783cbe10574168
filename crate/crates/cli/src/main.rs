//! `bbhk`: kernel grids, tail integrals, strip volumes, simulations and
//! verification suites from a TOML config.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{RunConfig, THREADS_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] bbhk_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Delegate(String),
}

impl CliError {
    /// 2 for anything the user can fix in the invocation or config, 1 for
    /// failures while running.
    fn exit_code(&self) -> u8 {
        use bbhk_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Config(_) | E::Input(_) | E::Domain(_) | E::Range(_) | E::Model(_) | E::Unsupported(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "bbhk", version, about = "Jump kernels with boundary blow-up: evaluation, simulation and verification suites")]
struct Cli {
    /// Worker threads; overrides the BBHK_THREADS environment variable.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Seed; overrides the config and BBHK_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        match &self.config {
            Some(p) => RunConfig::load(p),
            None => Ok(RunConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the configured kernel on all grid pairs (kernel.csv).
    Kernel(Common),
    /// Tail and annulus integrals over grid points and radii (tail.csv).
    Tail(Common),
    /// Boundary strip volumes against the Aikawa-type bound (aikawa.csv).
    Aikawa(Common),
    /// Simulate paths and write their endpoints (endpoints.csv, simulate.json).
    Simulate(Common),
    /// Compare density estimates with the bound form at grid targets (hk.csv).
    HkCheck(Common),
    /// Run a verification suite, or `all` (report.json, cases.csv).
    Suite {
        /// condition_a, tail_two_sided, aikawa, kernel_neumann, kernel_trace,
        /// kernel_resurrected, hk_two_sided, occupation, truncated_decay,
        /// cross_model or all.
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Render a run directory with the plots component.
    Report {
        /// Directory holding report.json.
        input: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn init_threads(flag: Option<usize>) -> Result<(), CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse().map_err(|_| CliError::Config(format!("{THREADS_ENV}={v} is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Config("worker count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    init_threads(cli.threads)?;
    let with = |c: &Common, fallback: &str| -> Result<(RunConfig, u64, PathBuf), CliError> {
        let cfg = c.load()?;
        let seed = cfg.resolve_seed(c.seed)?;
        let out = cfg.resolve_out(c.out.clone(), fallback);
        let cfg = RunConfig { seed: Some(seed), ..cfg };
        Ok((cfg, seed, out))
    };
    match &cli.command {
        Cmd::Kernel(c) => {
            let (cfg, _, out) = with(c, "out")?;
            commands::kernel(&cfg, &out)
        }
        Cmd::Tail(c) => {
            let (cfg, _, out) = with(c, "out")?;
            commands::tail(&cfg, &out)
        }
        Cmd::Aikawa(c) => {
            let (cfg, _, out) = with(c, "out")?;
            commands::aikawa(&cfg, &out)
        }
        Cmd::Simulate(c) => {
            let (cfg, seed, out) = with(c, "out")?;
            commands::simulate(&cfg, seed, &out)
        }
        Cmd::HkCheck(c) => {
            let (cfg, seed, out) = with(c, "out")?;
            commands::hk_check(&cfg, seed, &out)
        }
        Cmd::Suite { name, common } => {
            let (cfg, seed, out) = with(common, &format!("runs/{name}"))?;
            commands::suite(name, &cfg, seed, &out)
        }
        Cmd::Report { input, out } => commands::report(input, out.clone()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("bbhk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
