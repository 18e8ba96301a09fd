//! `wigner-ldp`: rate functions, free convolutions and Monte Carlo checks for
//! deformed Wigner matrices.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 validation failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "wigner-ldp", version, about = "Largest-eigenvalue large deviations for deformed Wigner matrices")]
struct Cli {
    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true, env = "WIGNER_LDP_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct MeasureArg {
    /// Measure spec JSON file.
    #[arg(long)]
    measure: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Mde,
    Wig,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Naive,
    Tilted,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Right edge of ρ_sc ⊞ μ_D and the critical thresholds.
    Edge {
        #[command(flatten)]
        measure: MeasureArg,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        beta: u8,
    },
    /// Density and Stieltjes transform of ρ_sc ⊞ μ_D on a grid.
    Freeconv {
        #[command(flatten)]
        measure: MeasureArg,
        #[arg(long)]
        out: PathBuf,
        /// Imaginary part used for the Stieltjes columns.
        #[arg(long, default_value_t = 1e-9)]
        eta: f64,
    },
    /// Rate function at one point or on a grid.
    Ratefn {
        #[command(flatten)]
        measure: MeasureArg,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        beta: u8,
        #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
        x: Option<f64>,
        /// `lo:hi:n`.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, requires = "grid")]
        out: Option<PathBuf>,
    },
    /// Writes fig1.csv (semicircle deformation) and fig2.csv (two-point deformation).
    Profile {
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Matrix Dyson equation for a diagonal deformation.
    Mde {
        /// One diagonal entry per line (commas also accepted).
        #[arg(long, conflicts_with = "measure", required_unless_present = "measure")]
        d_file: Option<PathBuf>,
        #[arg(long, requires = "n")]
        measure: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        /// Spectral parameter as `E,eta`.
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, value_enum, default_value = "wig")]
        kind: KindArg,
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Samples an ensemble and records extreme eigenvalues and ESD distances.
    Simulate {
        /// Ensemble spec JSON file.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 20)]
        trials: u64,
        #[arg(long)]
        out: PathBuf,
        /// Summary JSON; printed to stdout when absent.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the normalized spherical integral.
    Sphint {
        #[arg(long, conflicts_with = "measure", required_unless_present = "measure")]
        eigs_file: Option<PathBuf>,
        #[arg(long, requires = "n")]
        measure: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        beta: u8,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, value_enum, default_value = "tilted")]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Runs the validation suite.
    Validate {
        /// Comma-separated criterion numbers; all when absent.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
