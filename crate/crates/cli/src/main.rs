//! `stltree` command-line tool.
//!
//! Exit codes: 0 on success (and an optimal tree for `train`), 1 on errors,
//! 2 when `train` stops on its budget with a best-found tree, 3 when
//! `check-solution` finds violated constraints.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "stltree",
    version,
    about = "Learn STL decision-tree classifiers from labeled traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Configured {
    /// JSON file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,

    #[command(flatten)]
    run: RunConfig,
}

impl Configured {
    fn resolve(self) -> anyhow::Result<RunConfig> {
        match &self.config {
            Some(path) => Ok(self.run.over(RunConfig::load(path)?)),
            None => Ok(self.run),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Learn the optimal tree and write the model, solution and report.
    Train(Configured),

    /// Apply a saved tree to a dataset.
    Classify {
        /// Tree written by `train` (tree.json).
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Predictions CSV; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Write the mixed-integer model as an LP file with its manifest.
    ExportLp(Configured),

    /// Write a synthetic dataset as CSV.
    GenData {
        /// `naval`, `naval:<n per family>` or `plateau`.
        #[arg(long = "gen")]
        generator: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },

    /// Check a solution against every constraint of the model it claims to solve.
    CheckSolution {
        /// `solution.json` from `train`, or a text file of `name value` lines
        /// from an external solver.
        #[arg(long)]
        solution: PathBuf,
        /// Manifest written by `train` or `export-lp`.
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        data: Configured,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(c) => c.resolve().and_then(|run| commands::train(&run)),
        Command::Classify { model, data, out } => commands::classify(&model, &data, out.as_deref()),
        Command::ExportLp(c) => c.resolve().and_then(|run| commands::export_lp(&run)),
        Command::GenData { generator, seed, out } => commands::gen_data(&generator, seed, &out),
        Command::CheckSolution {
            solution,
            manifest,
            data,
        } => data
            .resolve()
            .and_then(|run| commands::check_solution(&solution, &manifest, &run)),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
