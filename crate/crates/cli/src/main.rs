mod net;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qrir::adapt::Scheme;
use qrir::config::Config;
use qrir::ldpc::CodePool;

#[derive(Parser)]
#[command(name = "qrir", version, about = "LDPC information reconciliation experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Schemes to run (comma separated); overrides `run.schemes`.
    #[arg(long, global = true, value_delimiter = ',')]
    scheme: Vec<SchemeArg>,
    /// Overrides `run.frames_per_point`.
    #[arg(long, global = true)]
    frames: Option<usize>,
    /// Per-frame CSV output; the summary goes next to it with a
    /// `_summary` suffix.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `net.host`.
    #[arg(long, global = true)]
    host: Option<String>,
    /// Overrides `net.port`.
    #[arg(long, global = true)]
    port: Option<u16>,
    /// Party played by this process in `serve` / `connect`.
    #[arg(long, global = true)]
    role: Option<Role>,
}

#[derive(Subcommand)]
enum Command {
    /// Builds the code pool and writes missing matrices to the cache.
    GenMatrices,
    /// Reconciles simulated keys over a grid of constant QBERs.
    Sweep {
        /// QBER grid (comma separated); overrides `run.qber_grid`.
        #[arg(long, value_delimiter = ',')]
        qber: Vec<f64>,
    },
    /// Reconciles keys from the channel model over a grid of losses.
    LossSweep {
        /// Loss grid in dB (comma separated); overrides `run.loss_grid_db`.
        #[arg(long, value_delimiter = ',')]
        loss: Vec<f64>,
    },
    /// Listens for the peer and runs one side of a session over TCP.
    Serve(NetArgs),
    /// Connects to a listening peer and runs one side of a session.
    Connect(NetArgs),
    /// Reconciles a recorded key pair (QKEY file) in memory.
    Replay {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Args, Clone)]
struct NetArgs {
    /// Constant QBER of the simulated keys.
    #[arg(long, default_value_t = 0.03)]
    qber: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    AdaptiveAsym,
    BlindFixed,
    BlindLinear,
    Symmetric,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::AdaptiveAsym => Scheme::AdaptiveAsym,
            SchemeArg::BlindFixed => Scheme::BlindFixed,
            SchemeArg::BlindLinear => Scheme::BlindLinear,
            SchemeArg::Symmetric => Scheme::Symmetric,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Role {
    Alice,
    Bob,
}

impl Common {
    fn load_config(&self) -> Result<Config> {
        let mut config = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(seed) = self.seed {
            config.run.seed = seed;
        }
        if !self.scheme.is_empty() {
            config.run.schemes = self.scheme.iter().map(|&s| s.into()).collect();
        }
        if let Some(frames) = self.frames {
            config.run.frames_per_point = frames;
        }
        if let Some(host) = &self.host {
            config.net.host = host.clone();
        }
        if let Some(port) = self.port {
            config.net.port = port;
        }
        config.validate()?;
        Ok(config)
    }

    fn out(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

/// `frames.csv` becomes `frames_summary.csv`.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = out.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    out.with_file_name(format!("{stem}_summary{ext}"))
}

pub fn load_pool(config: &Config) -> Result<CodePool> {
    Ok(CodePool::load(
        &config.code.cache_dir,
        config.frame.ell_frame,
        config.code.seed,
        config.code.distributions.as_deref(),
    )?)
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.common.load_config()?;
    match cli.command {
        Command::GenMatrices => {
            let written = CodePool::ensure_cached(
                &config.code.cache_dir,
                config.frame.ell_frame,
                config.code.seed,
                config.code.distributions.as_deref(),
            )
            .with_context(|| format!("generating matrices in {}", config.code.cache_dir.display()))?;
            if written.is_empty() {
                println!("all matrices present in {}", config.code.cache_dir.display());
            }
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Sweep { qber } => {
            let grid = if qber.is_empty() { config.run.qber_grid.clone() } else { qber };
            sweep::qber_sweep(&config, &grid, &cli.common.out("sweep.csv"))
        }
        Command::LossSweep { loss } => {
            let grid = if loss.is_empty() { config.run.loss_grid_db.clone() } else { loss };
            sweep::loss_sweep(&config, &grid, &cli.common.out("loss_sweep.csv"))
        }
        Command::Serve(args) => net::session(&config, role(&cli.common)?, args.qber, true, &cli.common.out("serve.csv")),
        Command::Connect(args) => {
            net::session(&config, role(&cli.common)?, args.qber, false, &cli.common.out("connect.csv"))
        }
        Command::Replay { input } => sweep::replay(&config, &input, &cli.common.out("replay.csv")),
    }
}

fn role(common: &Common) -> Result<Role> {
    common.role.context("--role alice|bob is required")
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
