use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lidarqc::io::CloudFormat;
use lidarqc::pipeline::{self, MetricsArgs, PredictArgs, SimulateArgs};

#[derive(Parser)]
#[command(name = "lidarqc", version, about = "LiDAR density and accuracy metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Las,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a synthetic scene and write the point cloud.
    Simulate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Noise seed; overrides the scene file.
        #[arg(long)]
        seed: Option<u64>,
        /// Emission log path (default: <out stem>.log.json).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Sample patches on surfaces and report density and accuracy.
    Metrics {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        surfaces: PathBuf,
        #[arg(long, default_value_t = 4.0)]
        patch_area: f64,
        #[arg(long, default_value_t = 10_000)]
        patches: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Max distance from a surface plane for a point to belong to it, m.
        #[arg(long, default_value_t = 0.5)]
        band: f64,
        /// Height bin for vertical density profiles, m.
        #[arg(long, default_value_t = 1.0)]
        bin: f64,
        /// Report path; `.csv` selects CSV, anything else JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict wall density by height from flight parameters.
    Predict {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        wall: String,
        #[arg(long, default_value_t = 1.0)]
        bin: f64,
        #[arg(long)]
        out: PathBuf,
        /// Pass to predict for (default: nearest parallel flight line).
        #[arg(long)]
        pass: Option<u32>,
    },
}

fn run(cli: Cli) -> lidarqc::Result<()> {
    match cli.command {
        Command::Simulate { scene, out, format, seed, log } => {
            let format = match format {
                Format::Csv => CloudFormat::Csv,
                Format::Las => CloudFormat::Las,
            };
            pipeline::run_simulate(&SimulateArgs { scene, out, format, seed, log })?;
        }
        Command::Metrics { cloud, surfaces, patch_area, patches, seed, band, bin, out } => {
            let report = pipeline::run_metrics(&MetricsArgs {
                cloud,
                surfaces,
                patch_area,
                patches,
                seed,
                band,
                bin,
                out,
            })?;
            for d in &report.diagnostics {
                eprintln!("note: {d}");
            }
        }
        Command::Predict { scene, wall, bin, out, pass } => {
            let p = pipeline::run_predict(&PredictArgs { scene, wall, bin, out, pass })?;
            for w in &p.profile.warnings {
                eprintln!("warning: {w}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
