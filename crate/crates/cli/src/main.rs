//! Command-line front end: band structures, fibers, evolutions and the
//! transport cascade, with CSV/JSON artifacts named by a config hash.

mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{parse_packet, Layer, PacketSpec, RunConfig};

#[derive(Parser)]
#[command(name = "lptransport", version, about = "Transport in periodic and limit-periodic potentials")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Opts {
    /// Potential file (JSON or TOML with `period` and `coefficients`).
    #[arg(long, global = true)]
    potential: Option<PathBuf>,
    /// Limit-periodic family file; the built-in demo family when absent.
    #[arg(long, global = true)]
    family: Option<PathBuf>,
    /// Gaussian packet as `center,width,wavenumber`.
    #[arg(long, global = true, value_parser = packet_arg, allow_hyphen_values = true)]
    packet: Option<String>,
    #[arg(long, global = true)]
    kpoints: Option<usize>,
    /// Plane-wave cutoff M (basis size 2M + 1).
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    horizon: Option<f64>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    max_energy: Option<f64>,
    /// TOML file whose keys override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Samples per cell of the base period.
    #[arg(long, global = true)]
    samples_per_cell: Option<usize>,
    /// Box size in base cells; sized from the packet speed when absent.
    #[arg(long, global = true)]
    cells: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Band table on a k-grid: CSV rows (n, k, E, v) and JSON edges.
    Bands,
    /// Discriminant and monodromy diagnostics on an energy grid.
    Discriminant {
        #[arg(long, allow_hyphen_values = true)]
        emin: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        emax: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Fiber eigensystems at one k or over the zone grid.
    Fiber {
        #[arg(long, allow_hyphen_values = true)]
        k: Option<f64>,
    },
    /// Evolve a packet to time t.
    Evolve {
        #[arg(long)]
        t: Option<f64>,
    },
    /// Transport experiments.
    Transport {
        #[command(subcommand)]
        action: Transport,
    },
    /// Run the invariant suite (free potential unless --potential is given).
    Verify,
}

#[derive(Subcommand)]
enum Transport {
    /// Cauchy differences of Q_n psi over the levels of a family.
    Cascade,
    /// Convergence of X_H(t)/t to Q_H for a periodic potential.
    Convergence,
}

fn packet_arg(s: &str) -> Result<String, String> {
    parse_packet(s).map(|_| s.to_string()).map_err(|e| e.message)
}

/// A failed run: exit code plus a machine-readable record.
#[derive(Debug, Serialize)]
pub struct Failure {
    #[serde(skip)]
    pub code: u8,
    pub kind: String,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "Usage".into(),
            message: message.into(),
        }
    }

    pub fn numerical(kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code: 1,
            kind: kind.into(),
            message: message.into(),
        }
    }
}

impl From<lptransport::Error> for Failure {
    fn from(e: lptransport::Error) -> Self {
        let debug = format!("{e:?}");
        let kind: String = debug.chars().take_while(|c| c.is_alphanumeric()).collect();
        Self::numerical(kind, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::numerical("Io", e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let record = serde_json::json!({ "error": f });
            eprintln!("{record}");
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let o = cli.opts;
    let mut flags = Layer {
        potential: o.potential,
        family: o.family,
        packet: o.packet.map(PacketSpec::Text),
        kpoints: o.kpoints,
        cutoff: o.cutoff,
        dt: o.dt,
        horizon: o.horizon,
        depth: o.depth,
        out: o.out,
        seed: o.seed,
        max_energy: o.max_energy,
        samples_per_cell: o.samples_per_cell,
        cells: o.cells,
        ..Layer::default()
    };
    let name = match &cli.command {
        Command::Bands => "bands",
        Command::Discriminant { emin, emax, points } => {
            flags.emin = *emin;
            flags.emax = *emax;
            flags.points = *points;
            "discriminant"
        }
        Command::Fiber { k } => {
            flags.k = *k;
            "fiber"
        }
        Command::Evolve { t } => {
            flags.t = *t;
            "evolve"
        }
        Command::Transport { action: Transport::Cascade } => "transport-cascade",
        Command::Transport { action: Transport::Convergence } => "transport-convergence",
        Command::Verify => "verify",
    };
    let cfg = RunConfig::resolve(name, flags, o.config.as_deref())?;
    match cli.command {
        Command::Bands => commands::bands(&cfg),
        Command::Discriminant { .. } => commands::discriminant(&cfg),
        Command::Fiber { .. } => commands::fiber(&cfg),
        Command::Evolve { .. } => commands::evolve(&cfg),
        Command::Transport { action: Transport::Cascade } => commands::cascade(&cfg),
        Command::Transport { action: Transport::Convergence } => commands::convergence(&cfg),
        Command::Verify => verify::run(&cfg),
    }
}
