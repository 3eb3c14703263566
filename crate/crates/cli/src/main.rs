use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;
mod svg;

#[derive(Parser)]
#[command(name = "multimem", version, about = "Design and simulate a switchable multiresonator quantum memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CaseArg {
    A,
    B,
}

#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Configuration document (JSON)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in reference configuration, used when --config is absent
    #[arg(long, value_enum)]
    pub case: Option<CaseArg>,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also write an SVG plot
    #[arg(long)]
    pub svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Reflection, efficiency, phase delay and noise gain on a frequency grid
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
        omega_min: f64,
        #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
        omega_max: f64,
        #[arg(long, default_value_t = 2000)]
        points: usize,
        /// Waveguide coupling (defaults to kappa0)
        #[arg(long)]
        k: Option<f64>,
    },
    /// Eigenfrequencies against the waveguide coupling, with merge detection
    EigenScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        k_min: f64,
        #[arg(long, default_value_t = 12.0)]
        k_max: f64,
        #[arg(long, default_value_t = 241)]
        k_steps: usize,
    },
    /// Two-step matching of the coupling and the waveguide rate
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Relative couplings w1,w2,w3
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        /// Target multiplet ratio r (pattern [-r,-1,1,r])
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        ratio: Option<u32>,
    },
    /// Time-domain store/retrieve run
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Repeat the simulation over a parameter range
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunArgs,
        /// NAME=lo:hi:steps with NAME one of gamma, gamma0, sigma, kappa0, f, cycles
        #[arg(long)]
        sweep: String,
    },
}

#[derive(Args, Clone, Debug)]
pub struct RunArgs {
    /// Storage time in revival periods
    #[arg(long)]
    pub cycles: Option<u32>,
    /// Pulse width
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// End time for runs driven by a schedule in the config
    #[arg(long)]
    pub t_end: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum { common, omega_min, omega_max, points, k } => {
            commands::spectrum(&common, omega_min, omega_max, points, k)
        }
        Command::EigenScan { common, k_min, k_max, k_steps } => commands::eigen_scan(&common, k_min, k_max, k_steps),
        Command::Optimize { common, weights, ratio } => commands::optimize(&common, weights, ratio),
        Command::Simulate { common, run } => commands::simulate(&common, &run),
        Command::Sweep { common, run, sweep } => commands::sweep(&common, &run, &sweep),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
