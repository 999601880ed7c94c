use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lsqtomo_cli::commands::{self, dataset_dir, Overrides};
use lsqtomo_cli::CliResult;

#[derive(Debug, Parser)]
#[command(name = "lsqtomo", version, about = "Least-squares density-matrix reconstruction for oscillator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    plots: bool,
    /// Overrides the configured λ sweep (comma separated).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    lambda: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct WithDataset {
    #[command(flatten)]
    common: Common,
    /// Dataset directory; defaults to `<out>/dataset`.
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a measurement and write the dataset with its metadata.
    Simulate(Common),
    /// Write kernel tables and the Gram condition report.
    Kernels(Common),
    /// Reconstruct the density matrix from a dataset.
    Reconstruct(WithDataset),
    /// Tikhonov L-curve over a λ sweep.
    Lcurve(WithDataset),
    /// Simulate, reconstruct and compare in one run.
    Pipeline(Common),
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, out: self.out.clone(), plots: self.plots, lambdas: self.lambda.clone() }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(c) => {
            let (cfg, out) = commands::load_config(&c.config, &c.overrides())?;
            commands::simulate(&cfg, &out).map(|_| ())
        }
        Command::Kernels(c) => {
            let (cfg, out) = commands::load_config(&c.config, &c.overrides())?;
            commands::kernels(&cfg, &out, c.plots)
        }
        Command::Reconstruct(w) => {
            let (cfg, out) = commands::load_config(&w.common.config, &w.common.overrides())?;
            let dataset = w.dataset.unwrap_or_else(|| dataset_dir(&out));
            commands::reconstruct(&cfg, &dataset, &out, w.common.plots)
        }
        Command::Lcurve(w) => {
            let (cfg, out) = commands::load_config(&w.common.config, &w.common.overrides())?;
            let dataset = w.dataset.unwrap_or_else(|| dataset_dir(&out));
            commands::lcurve(&cfg, &dataset, &out, w.common.plots).map(|_| ())
        }
        Command::Pipeline(c) => {
            let (cfg, out) = commands::load_config(&c.config, &c.overrides())?;
            commands::pipeline(&cfg, &out, c.plots)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
