use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tomography::{ExperimentConfig, ExperimentKind, Overrides};

#[derive(Parser)]
#[command(
    name = "tomography",
    version,
    about = "Probe loss-landscape geometry by training in affine subspaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact success probabilities on a quadratic well
    QuadraticSweep(Common),
    /// Random / burn-in / linearized subspace training of an MLP
    NnSweep(Common),
    /// Monte Carlo Gaussian width of an ellipsoid or point cloud
    WidthEstimate(Common),
    /// Distances between random affine subspaces
    AffineDistance(Common),
    /// Lottery subspaces from a training trajectory
    Lottery(Common),
    /// Magnitude-pruned lottery tickets
    Ticket(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (overrides the config)
    #[arg(long, env = "TOMOGRAPHY_WORKERS")]
    workers: Option<usize>,
    /// Also render phase diagrams
    #[arg(long)]
    svg: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match cli.command {
        Command::QuadraticSweep(c) => (ExperimentKind::QuadraticSweep, c),
        Command::NnSweep(c) => (ExperimentKind::NnSweep, c),
        Command::WidthEstimate(c) => (ExperimentKind::WidthEstimate, c),
        Command::AffineDistance(c) => (ExperimentKind::AffineDistance, c),
        Command::Lottery(c) => (ExperimentKind::Lottery, c),
        Command::Ticket(c) => (ExperimentKind::Ticket, c),
    };
    let overrides = Overrides { out: common.out, seed: common.seed, workers: common.workers };
    let result = ExperimentConfig::load(&common.config, kind).and_then(|mut cfg| {
        cfg.apply(&overrides)?;
        tomography::run(&cfg, common.svg)
    });
    match result {
        Ok(artifacts) => {
            for f in artifacts.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
