//! `glskit <subcommand> --config <path> [--seed N] [--out DIR]`

mod config;
mod error;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use error::CliError;
use output::OutputDir;

#[derive(Parser)]
#[command(name = "glskit", version, about = "Gumbel-max list sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate closed-form bounds for a (p, q) pair.
    Bound(Args),
    /// Monte Carlo acceptance of GLS and baselines for a (p, q) pair.
    Couple(Args),
    /// Acceptance curves over random (p, q) pairs.
    ToySweep(Args),
    /// Multi-draft speculative decoding over random tabular models.
    Specdec(Args),
    /// Mismatch rates of the discrete side-information code.
    WzDiscrete(Args),
    /// Gaussian rate-distortion sweep.
    GaussianRd(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn parts(self) -> (&'static str, Args) {
        match self {
            Command::Bound(a) => ("bound", a),
            Command::Couple(a) => ("couple", a),
            Command::ToySweep(a) => ("toy-sweep", a),
            Command::Specdec(a) => ("specdec", a),
            Command::WzDiscrete(a) => ("wz-discrete", a),
            Command::GaussianRd(a) => ("gaussian-rd", a),
        }
    }
}

fn run(cli: Cli) -> Result<PathBuf, CliError> {
    let (name, args) = cli.command.parts();
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    cfg.seed.get_or_insert(0);
    if let Some(out) = args.out {
        cfg.out = Some(out.display().to_string());
    }
    let root = PathBuf::from(cfg.out.get_or_insert_with(|| "out".into()).clone());
    let mut out = OutputDir::create(&root)?;
    match name {
        "bound" => experiments::bound(&cfg, &mut out)?,
        "couple" => experiments::couple(&cfg, &mut out)?,
        "toy-sweep" => experiments::toy_sweep(&cfg, &mut out)?,
        "specdec" => experiments::specdec(&cfg, &mut out)?,
        "wz-discrete" => experiments::wz_discrete(&cfg, &mut out)?,
        "gaussian-rd" => experiments::gaussian_rd(&cfg, &mut out)?,
        _ => unreachable!(),
    }
    out.write_manifest(name, &cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(manifest) => {
            println!("wrote {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
