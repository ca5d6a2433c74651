mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmetro::ErrorClass;

#[derive(Parser)]
#[command(name = "qmetro", version, about = "Quantum Fisher information and estimation bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Point {
    /// Model file (JSON)
    #[arg(long)]
    pub model: PathBuf,
    /// Parameter value(s), comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub lambda: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Generic,
    Pure,
    Unitary,
    Decomposed,
}

#[derive(Subcommand)]
pub enum Command {
    /// Quantum Fisher information at a point
    Qfi {
        #[command(flatten)]
        point: Point,
        #[arg(long, value_enum, default_value_t = MethodArg::Generic)]
        method: MethodArg,
    },
    /// Symmetric logarithmic derivative
    Sld {
        #[command(flatten)]
        point: Point,
        /// One-based parameter index
        #[arg(long, default_value_t = 1)]
        param: usize,
    },
    /// Classical Fisher information of a given POVM
    PovmFisher {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        povm: PathBuf,
    },
    /// Eigenprojectors of the SLD and the Fisher information they reach
    OptimalPovm {
        #[command(flatten)]
        point: Point,
    },
    /// Locally unbiased estimator with variance 1/H
    Estimator {
        #[command(flatten)]
        point: Point,
    },
    /// QFI matrix of a multiparameter family
    QfiMatrix {
        #[command(flatten)]
        point: Point,
    },
    /// Multiparameter Cramér-Rao bounds
    Crb {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 1)]
        measurements: u64,
    },
    /// QFI matrix in new coordinates
    Reparam {
        #[command(flatten)]
        point: Point,
        /// Jacobian rows separated by ';', entries by ',' ("0.5,0.5;0.5,-0.5")
        #[arg(long, conflicts_with = "map", allow_hyphen_values = true)]
        b: Option<String>,
        /// Old coordinates as expressions in the new ones, separated by ';'.
        /// With --map, --lambda is the point in the new coordinates.
        #[arg(long, allow_hyphen_values = true)]
        map: Option<String>,
        #[arg(long, default_value_t = 1)]
        measurements: u64,
    },
    /// Compare the finite-difference Bures metric against QFI/4
    BuresCheck {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Signal-to-noise ratio and measurements needed for a relative error
    Estimability {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
    /// Van Trees (Bayesian Cramér-Rao) bound
    VanTrees {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        prior: PathBuf,
        #[arg(long, default_value_t = 1)]
        measurements: u64,
        /// Measurement used for the classical term; the QFI term is always reported
        #[arg(long)]
        povm: Option<PathBuf>,
    },
    /// Monte-Carlo maximum-likelihood experiment
    Simulate {
        #[command(flatten)]
        point: Point,
        /// Defaults to the SLD eigenprojectors at the true value
        #[arg(long)]
        povm: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        shots: u64,
        #[arg(long, default_value_t = 500)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Search interval; defaults to the model's declared range
        #[arg(long, allow_negative_numbers = true)]
        lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        hi: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let json = report.into_json();
            let mut out = std::io::stdout().lock();
            let text = serde_json::to_string_pretty(&json).expect("report serializes");
            if writeln!(out, "{text}").is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e.class() {
                ErrorClass::Validation => ExitCode::from(2),
                ErrorClass::Numerical => ExitCode::from(3),
            }
        }
    }
}
