use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tactile_grasp::{cmd_bias_plot, cmd_calibrate, cmd_simulate};

#[derive(Parser)]
#[command(name = "tactile-grasp", version, about = "Tactile grasping from joint-torque sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate free-motion data, train the bias model and write it.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides calibration.seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the closed-loop grasp and write the log, report and plots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Plot one joint's training samples and the model's two direction branches.
    BiasPlot {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        joint: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Calibrate { config, out, seed } => cmd_calibrate(config, out, *seed),
        Command::Simulate { config, model, out_dir } => cmd_simulate(config, model, out_dir),
        Command::BiasPlot { model, joint, out } => cmd_bias_plot(model, *joint, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
