//! obspec: sweeps of information loss and estimation uncertainty for 1-bit
//! sampled band-limited Gaussian processes, driven by scenario files.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure.

mod commands;
mod errors;
mod output;
mod scenario;
mod sweep;

use clap::{Args, Parser, Subcommand};
use errors::{CliError, Result};
use std::path::PathBuf;
use sweep::{parse_grid, parse_modes, SweepSpec};

#[derive(Parser)]
#[command(
    name = "obspec",
    version,
    about = "Spectral power estimation from 1-bit samples: loss and uncertainty sweeps"
)]
struct Cli {
    /// Worker thread count for grid points and trials (default: one per CPU)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Information loss of 1-bit sampling over a theta_2 sweep, as CSV
    Loss(SweepArgs),
    /// Analytic and empirical relative uncertainties over a theta_2 sweep
    Uncertainty(SweepArgs),
    /// Validate a scenario file and print its derived sizes
    Check {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Dump or load the binary fourth-moment cache for one (scenario, theta)
    MomentTable {
        #[command(subcommand)]
        action: MomentTableCmd,
    },
}

#[derive(Subcommand)]
enum MomentTableCmd {
    /// Compute the quadrivariate moment table and write it to a file
    Dump {
        #[arg(long)]
        scenario: PathBuf,
        /// Source powers in dB, comma separated, one per source
        #[arg(long = "theta-db", allow_hyphen_values = true)]
        theta_db: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a moment table and verify checksum and fingerprints
    Load {
        #[arg(long)]
        scenario: PathBuf,
        /// Source powers in dB, comma separated, one per source
        #[arg(long = "theta-db", allow_hyphen_values = true)]
        theta_db: String,
        #[arg(long)]
        table: PathBuf,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Fixed theta_1 level in dB
    #[arg(long = "theta1-db", allow_hyphen_values = true)]
    theta1_db: f64,
    /// theta_2 grid as FROM:TO:STEP in dB (inclusive endpoints)
    #[arg(long, allow_hyphen_values = true)]
    sweep: String,
    /// Windows per trial (default 100000; desk preset 10000)
    #[arg(long)]
    n: Option<usize>,
    /// Monte-Carlo trials (default 1000; desk preset 200; 0 = analytic only)
    #[arg(long)]
    k: Option<usize>,
    /// Fisher-scoring iterations
    #[arg(long, default_value_t = 5)]
    iters: usize,
    /// Positivity floor for the power estimates, in dB
    #[arg(long = "floor-db", default_value_t = -30.0, allow_hyphen_values = true)]
    floor_db: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma list from {loss, crb, mc-quant, mc-ideal}
    #[arg(long, default_value = "loss,crb")]
    mode: String,
    #[arg(long)]
    out: PathBuf,
    /// Named parameter preset; `desk` = M 16, N 10^4, K 200
    #[arg(long)]
    preset: Option<String>,
}

fn build_spec(args: &SweepArgs) -> Result<SweepSpec> {
    let mut scenario = scenario::parse_scenario_file(&args.scenario)?;
    let (mut n_windows, mut k_trials) = (100_000, 1_000);
    match args.preset.as_deref() {
        None => {}
        Some("desk") => {
            scenario = onebit_spectral::Scenario::new(
                scenario.omega_bar().to_vec(),
                scenario.bandwidth_bar().to_vec(),
                scenario.sampler_ratio(),
                16,
            )?;
            n_windows = 10_000;
            k_trials = 200;
        }
        Some(other) => {
            return Err(CliError::Validation(format!(
                "unknown preset `{other}` (available: desk)"
            )));
        }
    }
    if let Some(n) = args.n {
        n_windows = n;
    }
    if let Some(k) = args.k {
        k_trials = k;
    }
    Ok(SweepSpec {
        scenario,
        theta1_db: args.theta1_db,
        grid_db: parse_grid(&args.sweep)?,
        n_windows,
        k_trials,
        iterations: args.iters,
        floor_db: args.floor_db,
        seed: args.seed,
        modes: parse_modes(&args.mode)?,
        out: args.out.clone(),
    })
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Validation(format!("cannot set thread count: {e}")))?;
    }
    match &cli.command {
        Command::Loss(args) => commands::cmd_loss(&build_spec(args)?),
        Command::Uncertainty(args) => commands::cmd_uncertainty(&build_spec(args)?),
        Command::Check { scenario } => commands::cmd_check(scenario),
        Command::MomentTable { action } => match action {
            MomentTableCmd::Dump {
                scenario,
                theta_db,
                out,
            } => commands::cmd_moment_dump(scenario, theta_db, out),
            MomentTableCmd::Load {
                scenario,
                theta_db,
                table,
            } => commands::cmd_moment_load(scenario, theta_db, table),
        },
    }
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
