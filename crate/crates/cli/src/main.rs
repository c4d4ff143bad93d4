use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ppc_cli::commands::{align, eval, hpr, report, synth, train};

/// Partial point cloud classification pipeline: synthesize single-view
/// datasets with exact pose labels, align clouds to canonical pose, train
/// pose/classification networks, and evaluate.
#[derive(Parser)]
#[command(name = "ppc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a synthetic partial point cloud dataset.
    Synth(synth::SynthArgs),
    /// Remove hidden points from a cloud file.
    Hpr(hpr::HprArgs),
    /// Train the pose regressor, the classifier, or both jointly.
    Train(train::TrainArgs),
    /// Write an aligned copy of a dataset (oracle/predicted/none).
    Align(align::AlignArgs),
    /// Score a checkpoint or predictions on a split.
    Eval(eval::EvalArgs),
    /// Merge metric CSVs into a summary and plot data.
    Report(report::ReportArgs),
}

fn main() -> ExitCode {
    // Usage errors exit with status 2 via clap.
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(args) => synth::run(args),
        Command::Hpr(args) => hpr::run(args),
        Command::Train(args) => train::run(args),
        Command::Align(args) => align::run(args),
        Command::Eval(args) => eval::run(args),
        Command::Report(args) => report::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
